#include "fbmhypo/malliavin.hpp"

#include "fbmhypo/errors.hpp"
#include "fbmhypo/fraccalc.hpp"
#include "fbmhypo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fbmhypo {

double cutoff_value(double s, double T) {
  const double lo = 0.5 * T;
  const double hi = 0.75 * T;
  if (s <= lo) return 1.0;
  if (s >= hi) return 0.0;
  // q(a)/(q(a)+q(b)) = 1/(1 + exp(1/a - 1/b)), which cannot overflow to NaN.
  const double a = hi - s;
  const double b = s - lo;
  return 1.0 / (1.0 + std::exp(1.0 / a - 1.0 / b));
}

CutoffFunction cutoff_h(double T, double t0, double dt, std::size_t points) {
  CutoffFunction h;
  h.T = T;
  h.values = SampledPath(t0, dt, points, 1);
  for (std::size_t k = 0; k < points; ++k) h.values(k) = cutoff_value(h.values.time(k), T);
  return h;
}

namespace {

void check_grid(const FlowPath& flow, const SampledPath& p, const char* what) {
  if (p.size() != flow.X.size() || std::abs(p.dt() - flow.X.dt()) > 1e-12 * flow.X.dt() ||
      std::abs(p.t0() - flow.X.t0()) > 1e-12) {
    throw DomainError(std::string(what) + ": grid differs from the flow grid");
  }
}

// Jinv_k V(X_k), n x d.
Eigen::MatrixXd reduced(const FlowPath& flow, std::size_t k) { return flow.Jinv_at(k) * flow.V_at(k); }

double trapezoid_weight(std::size_t k, std::size_t last, double dt) { return (k == 0 || k == last) ? 0.5 * dt : dt; }

struct Moments {
  double sum = 0, sumsq = 0;
  std::size_t count = 0;
  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double stderr_() const {
    if (count < 2) return 0.0;
    const double m = mean();
    const double var = (sumsq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1);
    return std::sqrt(std::max(var, 0.0) / static_cast<double>(count));
  }
};

}  // namespace

Eigen::VectorXd operator_A(const FlowPath& flow, const SampledPath& v, double t_end) {
  check_grid(flow, v, "operator_A");
  if (v.dim() != flow.d()) throw DomainError("operator_A: v must have d components");
  const std::size_t last = flow.X.index_of(t_end);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flow.n()));
  for (std::size_t k = 0; k <= last; ++k) {
    const Eigen::Map<const Eigen::VectorXd> vk(v.row(k).data(), static_cast<Eigen::Index>(v.dim()));
    acc += trapezoid_weight(k, last, flow.X.dt()) * (reduced(flow, k) * vk);
  }
  return acc;
}

SampledPath operator_A_adjoint(const FlowPath& flow, const Eigen::VectorXd& xi) {
  if (static_cast<std::size_t>(xi.size()) != flow.n()) throw DomainError("operator_A_adjoint: xi has the wrong dimension");
  SampledPath out(flow.X.t0(), flow.X.dt(), flow.X.size(), flow.d());
  for (std::size_t k = 0; k < flow.X.size(); ++k) {
    const Eigen::VectorXd w = reduced(flow, k).transpose() * xi;
    for (std::size_t a = 0; a < flow.d(); ++a) out(k, a) = w(static_cast<Eigen::Index>(a));
  }
  return out;
}

Eigen::MatrixXd malliavin_matrix(const FlowPath& flow, const CutoffFunction* h) {
  if (h) check_grid(flow, h->values, "malliavin_matrix");
  const auto n = static_cast<Eigen::Index>(flow.n());
  const std::size_t last = flow.X.size() - 1;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k <= last; ++k) {
    const double w = trapezoid_weight(k, last, flow.X.dt()) * (h ? h->values(k) : 1.0);
    if (w == 0.0) continue;
    const Eigen::MatrixXd g = reduced(flow, k);
    C.noalias() += w * g * g.transpose();
  }
  return 0.5 * (C + C.transpose());
}

double lambda_min(const Eigen::MatrixXd& C) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Control control_v(const FlowPath& flow, const Eigen::VectorXd& xi, const CutoffFunction& h, double min_lambda) {
  const Eigen::MatrixXd C = malliavin_matrix(flow, &h);
  Control out;
  out.lambda_min = lambda_min(C);
  if (!(out.lambda_min > min_lambda)) {
    std::ostringstream os;
    os << "control_v: cut-off Malliavin matrix is near singular (lambda_min = " << out.lambda_min
       << "); the bracket condition may fail or the horizon is too short";
    throw NumericalError(os.str());
  }
  const Eigen::VectorXd y = C.ldlt().solve(xi);
  out.v = operator_A_adjoint(flow, y);
  for (std::size_t k = 0; k < out.v.size(); ++k) {
    for (std::size_t a = 0; a < out.v.dim(); ++a) out.v(k, a) *= h.values(k);
  }
  out.residual = (operator_A(flow, out.v, flow.X.t_end()) - xi).norm();
  return out;
}

SampledPath extend_by_zero(const SampledPath& v, double horizon) {
  const double steps = (horizon - v.t0()) / v.dt();
  const auto points = static_cast<std::size_t>(std::llround(steps)) + 1;
  if (points < v.size()) throw DomainError("extend_by_zero: horizon before the end of the path");
  SampledPath out(v.t0(), v.dt(), points, v.dim());
  out.values().topRows(static_cast<Eigen::Index>(v.size())) = v.values();
  return out;
}

MalliavinReport malliavin_report(const FlowPath& flow, const Eigen::VectorXd& xi) {
  MalliavinReport r;
  const double T = flow.X.t_end() - flow.X.t0();
  const CutoffFunction h = cutoff_h(T, flow.X.t0(), flow.X.dt(), flow.X.size());
  r.C_T = malliavin_matrix(flow, &h);
  r.C_hat = malliavin_matrix(flow);
  r.lambda_min = lambda_min(r.C_T);
  r.lambda_min_hat = lambda_min(r.C_hat);
  r.loewner_gap = lambda_min(r.C_hat - r.C_T);
  if (r.lambda_min > 1e-10) r.control_residual = control_v(flow, xi, h).residual;
  else r.control_residual = std::numeric_limits<double>::quiet_NaN();
  return r;
}

double malliavin_derivative_fd(const std::function<double(const RowMatrix&)>& F, const RowMatrix& W,
                               std::size_t bin, std::size_t component, double eps) {
  if (!(eps > 0.0)) throw DomainError("malliavin_derivative_fd: eps must be positive");
  RowMatrix up = W, down = W;
  up(static_cast<Eigen::Index>(bin), static_cast<Eigen::Index>(component)) += eps;
  down(static_cast<Eigen::Index>(bin), static_cast<Eigen::Index>(component)) -= eps;
  return (F(up) - F(down)) / (2.0 * eps);
}

ResponseCheck first_order_response(const FieldEvaluator& eval, const Eigen::VectorXd& x0, const FlowPath& flow,
                                   const SampledPath& v, double eps) {
  check_grid(flow, v, "first_order_response");
  // B + eps int_0^t v, cumulative trapezoid.
  SampledPath shifted = flow.driver;
  std::vector<double> acc(v.dim(), 0.0);
  for (std::size_t k = 1; k < v.size(); ++k) {
    for (std::size_t a = 0; a < v.dim(); ++a) {
      acc[a] += 0.5 * v.dt() * (v(k - 1, a) + v(k, a));
      shifted(k, a) += eps * acc[a];
    }
  }
  const SampledPath x_eps = solve_state(eval, x0, shifted);
  const std::size_t last = flow.X.size() - 1;
  ResponseCheck r;
  r.finite_difference = (Eigen::Map<const Eigen::VectorXd>(x_eps.row(last).data(), static_cast<Eigen::Index>(flow.n())) -
                         flow.x_at(last)) /
                        eps;
  r.predicted = flow.J_at(last) * operator_A(flow, v, flow.X.t_end());
  r.rel_err = (r.finite_difference - r.predicted).norm() / std::max(r.predicted.norm(), 1e-300);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

double sq_integral(const RowMatrix& bins, double dt, std::size_t from, std::size_t to) {
  double acc = 0.0;
  for (std::size_t j = from; j < to; ++j) acc += bins.row(static_cast<Eigen::Index>(j)).squaredNorm();
  return acc * dt;
}

}  // namespace

SkorohodTerms skorohod_terms(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                             const ConditionedNoise& noise, const Eigen::VectorXd& xi,
                             const MonteCarloSettings& mc, bool with_M2, double horizon) {
  const double T = noise.dt() * static_cast<double>(noise.bins());
  if (horizon < 8.0 * T - 1e-12) throw DomainError("skorohod_terms: horizon must be at least 8 T");
  const FieldEvaluator eval(fields, false);
  const double alpha = noise.params().H - 0.5;
  const double dt = noise.dt();
  const CutoffFunction h = cutoff_h(T, 0.0, dt, noise.bins() + 1);
  FlowOptions opts;
  opts.check_consistency = false;

  auto tilde_v = [&](const RowMatrix& dW) {
    const FlowPath flow = solve_flow(eval, x0, noise.driver(dW), opts);
    const Control c = control_v(flow, xi, h);
    return frac_derivative_bin_average(extend_by_zero(c.v, horizon), alpha);
  };

  struct Slot {
    bool ok = false;
    double m1 = 0, m2 = 0;
    double tails[3] = {0, 0, 0};
  };
  std::vector<Slot> slots(mc.n_mc);
  parallel_for(
      mc.n_mc,
      [&](std::size_t i) {
        auto rng = make_engine(mc.seed, i);
        const RowMatrix dW = noise.draw(rng);
        RowMatrix vt;
        try {
          vt = tilde_v(dW);
        } catch (const Error&) {
          return;
        }
        Slot s;
        s.ok = true;
        const std::size_t total = static_cast<std::size_t>(vt.rows());
        s.m1 = sq_integral(vt, dt, 0, total);
        const auto at = [&](double t) { return std::min(total, static_cast<std::size_t>(std::llround(t / dt))); };
        s.tails[0] = sq_integral(vt, dt, at(1.0 * T), at(2.0 * T));
        s.tails[1] = sq_integral(vt, dt, at(1.0 * T), at(4.0 * T));
        s.tails[2] = sq_integral(vt, dt, at(1.0 * T), at(8.0 * T));
        if (with_M2) {
          const double eps = 1e-4 * std::sqrt(dt);
          double m2 = 0.0;
          for (std::size_t t = 0; t < noise.bins(); ++t) {
            for (std::size_t a = 0; a < noise.dim(); ++a) {
              RowMatrix up = dW, down = dW;
              up(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a)) += eps;
              down(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(a)) -= eps;
              const RowMatrix d = (tilde_v(up) - tilde_v(down)) / (2.0 * eps);
              m2 += sq_integral(d, dt, 0, total) * dt;
            }
          }
          s.m2 = m2;
        }
        slots[i] = s;
      },
      mc.threads);

  SkorohodTerms out;
  out.with_M2 = with_M2;
  Moments m1, m2;
  double tails[3] = {0, 0, 0};
  for (const auto& s : slots) {
    if (!s.ok) {
      ++out.excluded;
      continue;
    }
    ++out.accepted;
    m1.add(s.m1);
    m2.add(s.m2);
    for (int q = 0; q < 3; ++q) tails[q] += s.tails[q];
  }
  out.M1 = m1.mean();
  out.M1_stderr = m1.stderr_();
  out.M2 = m2.mean();
  out.M2_stderr = m2.stderr_();
  if (out.accepted > 0) {
    for (double& t : tails) t /= static_cast<double>(out.accepted);
  }
  out.tail.assign(tails, tails + 3);
  out.tail_ratio = tails[2] > 0.0 ? (tails[2] - tails[1]) / tails[2] : 0.0;
  return out;
}

TailTable tail_from_samples(const std::vector<double>& lambdas, const std::vector<double>& eps) {
  TailTable t;
  t.eps = eps;
  t.lambdas = lambdas;
  t.n_mc = lambdas.size();
  std::size_t valid = 0;
  for (double l : lambdas) {
    if (std::isnan(l)) ++t.failed;
    else ++valid;
  }
  for (double e : eps) {
    std::size_t hits = 0;
    for (double l : lambdas) {
      if (!std::isnan(l) && l <= e) ++hits;
    }
    const double p = valid ? static_cast<double>(hits) / static_cast<double>(valid) : 0.0;
    t.p_hat.push_back(p);
    t.stderr_.push_back(valid ? std::sqrt(p * (1.0 - p) / static_cast<double>(valid)) : 0.0);
  }
  // Slope over the points with a non-zero estimate.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (t.p_hat[i] <= 0.0 || eps[i] <= 0.0) continue;
    const double x = std::log(eps[i]);
    const double y = std::log(t.p_hat[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    m += 1;
  }
  if (m >= 2 && m * sxx - sx * sx > 0) t.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  // Strictly decreasing as eps decreases, i.e. p_hat strictly increasing in eps.
  std::vector<std::size_t> order(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps[a] < eps[b]; });
  t.strictly_decreasing = eps.size() >= 2;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (!(t.p_hat[order[i]] > t.p_hat[order[i - 1]])) t.strictly_decreasing = false;
  }
  return t;
}

TailTable lambda_min_tail(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                          const ConditionedNoise& noise, const std::vector<double>& eps,
                          const MonteCarloSettings& mc, const FlowOptions& options) {
  const FieldEvaluator eval(fields, false);
  const double T = noise.dt() * static_cast<double>(noise.bins());
  const CutoffFunction h = cutoff_h(T, 0.0, noise.dt(), noise.bins() + 1);
  std::vector<double> lambdas(mc.n_mc, std::numeric_limits<double>::quiet_NaN());
  parallel_for(
      mc.n_mc,
      [&](std::size_t i) {
        auto rng = make_engine(mc.seed, i);
        const RowMatrix dW = noise.draw(rng);
        try {
          const FlowPath flow = solve_flow(eval, x0, noise.driver(dW), options);
          lambdas[i] = lambda_min(malliavin_matrix(flow, &h));
        } catch (const Error&) {
        }
      },
      mc.threads);
  return tail_from_samples(lambdas, eps);
}

GradientResult gradient_estimator(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                                  const ConditionedNoise& noise, const std::function<double(const SampledPath&)>& psi,
                                  const Eigen::VectorXd& xi, const MonteCarloSettings& mc, double fd_dx) {
  if (!fields.additive_affine()) {
    throw UnsupportedError(
        "gradient_estimator: the control depends on the noise for this field set; only constant noise "
        "fields with an affine drift are supported");
  }
  const FieldEvaluator eval(fields, false);
  const double T = noise.dt() * static_cast<double>(noise.bins());
  const double H = noise.params().H;
  const double dt = noise.dt();

  // The control is the same for every draw; build it on the conditional mean path.
  const RowMatrix zero = RowMatrix::Zero(static_cast<Eigen::Index>(noise.bins()), static_cast<Eigen::Index>(noise.dim()));
  FlowOptions opts;
  opts.check_consistency = false;
  const FlowPath flow = solve_flow(eval, x0, noise.driver(zero), opts);
  const CutoffFunction h = cutoff_h(T, 0.0, dt, noise.bins() + 1);
  const Control c = control_v(flow, xi, h);
  const double kappa = noise.params().alpha_H * std::tgamma(H + 0.5);
  const RowMatrix theta = frac_derivative_bin_average(c.v, H - 0.5) / kappa;

  struct Slot {
    double est = 0, fd = 0;
  };
  std::vector<Slot> slots(mc.n_mc);
  const Eigen::VectorXd xp = x0 + fd_dx * xi;
  const Eigen::VectorXd xm = x0 - fd_dx * xi;
  parallel_for(
      mc.n_mc,
      [&](std::size_t i) {
        auto rng = make_engine(mc.seed, i);
        const RowMatrix dW = noise.draw(rng);
        const SampledPath B = noise.driver(dW);
        const double weight = theta.cwiseProduct(dW).sum();
        slots[i].est = psi(solve_state(eval, x0, B)) * weight;
        slots[i].fd = (psi(solve_state(eval, xp, B)) - psi(solve_state(eval, xm, B))) / (2.0 * fd_dx);
      },
      mc.threads);

  Moments est, fd;
  for (const auto& s : slots) {
    est.add(s.est);
    fd.add(s.fd);
  }
  GradientResult r;
  r.estimate = est.mean();
  r.stderr_ = est.stderr_();
  r.fd_oracle = fd.mean();
  r.fd_stderr = fd.stderr_();
  r.rel_err = std::abs(r.estimate - r.fd_oracle) / std::max(std::abs(r.fd_oracle), 1e-300);
  r.M1 = theta.squaredNorm() * dt;
  return r;
}

}  // namespace fbmhypo
