#include "fbmhypo/flow.hpp"

#include "fbmhypo/errors.hpp"
#include "fbmhypo/holder.hpp"

#include <cmath>
#include <sstream>

namespace fbmhypo {

Eigen::VectorXd FlowPath::x_at(std::size_t k) const {
  return Eigen::Map<const Eigen::VectorXd>(X.row(k).data(), static_cast<Eigen::Index>(n()));
}

Eigen::MatrixXd FlowPath::J_at(std::size_t k) const {
  const auto m = static_cast<Eigen::Index>(n());
  return Eigen::Map<const RowMatrix>(J.row(k).data(), m, m);
}

Eigen::MatrixXd FlowPath::Jinv_at(std::size_t k) const {
  const auto m = static_cast<Eigen::Index>(n());
  return Eigen::Map<const RowMatrix>(Jinv.row(k).data(), m, m);
}

Eigen::MatrixXd FlowPath::V_at(std::size_t k) const {
  return Eigen::Map<const RowMatrix>(noise.row(k).data(), static_cast<Eigen::Index>(n()),
                                     static_cast<Eigen::Index>(d()));
}

Eigen::VectorXd FlowPath::Z_contract(std::size_t k, const Eigen::VectorXd& y, const Eigen::VectorXd& w) const {
  if (!Z) throw DomainError("flow was solved without the second variation");
  const std::size_t m = n();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  const auto z = Z->row(k);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t l = 0; l < m; ++l) acc += z[(i * m + j) * m + l] * y(static_cast<Eigen::Index>(j)) * w(static_cast<Eigen::Index>(l));
    }
    out(static_cast<Eigen::Index>(i)) = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<expr::Expr> value_outputs(const expr::VectorFieldSet& fs) {
  std::vector<expr::Expr> out;
  for (const auto& f : fs.fields) out.insert(out.end(), f.begin(), f.end());
  return out;
}

}  // namespace

FieldEvaluator::FieldEvaluator(const expr::VectorFieldSet& fields, bool hessians)
    : n_(static_cast<std::size_t>(fields.n)), d_(static_cast<std::size_t>(fields.d)), hessians_(hessians) {
  if (fields.fields.size() != d_ + 1) throw DomainError("field set must hold d + 1 fields");
  for (const auto& f : fields.fields) {
    if (f.size() != n_) throw DomainError("field set: every field needs n components");
  }
  std::vector<expr::Expr> all = value_outputs(fields);
  values_ = expr::Program(all);
  std::vector<expr::ExprMatrix> jac;
  for (const auto& f : fields.fields) {
    jac.push_back(expr::jacobian(f));
    for (const auto& row : jac.back()) all.insert(all.end(), row.begin(), row.end());
  }
  if (hessians) {
    for (const auto& J : jac) {
      for (const auto& row : J) {
        for (const auto& entry : row) {
          for (std::size_t k = 0; k < n_; ++k) all.push_back(entry.derivative(static_cast<int>(k)));
        }
      }
    }
  }
  all_ = expr::Program(all);
}

void FieldEvaluator::eval_all(std::span<const double> x, std::vector<double>& out, std::vector<double>& stack) const {
  out.resize(all_.outputs());
  all_.run(x, out, stack);
}

void FieldEvaluator::eval_values(std::span<const double> x, std::vector<double>& out, std::vector<double>& stack) const {
  out.resize(values_.outputs());
  values_.run(x, out, stack);
}

// ---------------------------------------------------------------------------

namespace {

// The augmented state packed as one vector: X (n), J (n*n), Jinv (n*n), Z (n^3).
struct Layout {
  std::size_t n;
  bool z;
  std::size_t x() const { return 0; }
  std::size_t j() const { return n; }
  std::size_t jinv() const { return n + n * n; }
  std::size_t zoff() const { return n + 2 * n * n; }
  std::size_t size() const { return zoff() + (z ? n * n * n : 0); }
};

class Stepper {
 public:
  Stepper(const FieldEvaluator& eval, bool with_z) : eval_(eval), lay_{eval.n(), with_z} {
    if (with_z && !eval.has_hessians()) throw DomainError("second variation needs Hessians");
  }

  const Layout& layout() const { return lay_; }

  // out = F(s) for the increments dy = (dt, dB_1..dB_d).
  void rhs(const std::vector<double>& s, const std::vector<double>& dy, std::vector<double>& out) {
    const std::size_t n = lay_.n;
    const std::size_t d = eval_.d();
    eval_.eval_all(std::span<const double>(s.data(), n), buf_, stack_);
    out.assign(lay_.size(), 0.0);
    // A = sum_a DV_a dy_a
    a_.assign(n * n, 0.0);
    for (std::size_t a = 0; a <= d; ++a) {
      const double w = dy[a];
      if (w == 0.0) continue;
      const double* v = buf_.data() + a * n;
      for (std::size_t i = 0; i < n; ++i) out[lay_.x() + i] += v[i] * w;
      const double* dv = buf_.data() + eval_.jac_offset() + a * n * n;
      for (std::size_t q = 0; q < n * n; ++q) a_[q] += dv[q] * w;
    }
    const double* J = s.data() + lay_.j();
    const double* Ji = s.data() + lay_.jinv();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        double aj = 0.0, ja = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
          aj += a_[i * n + p] * J[p * n + k];
          ja += Ji[i * n + p] * a_[p * n + k];
        }
        out[lay_.j() + i * n + k] = aj;
        out[lay_.jinv() + i * n + k] = -ja;
      }
    }
    if (!lay_.z) return;
    const double* Z = s.data() + lay_.zoff();
    double* fz = out.data() + lay_.zoff();
    // fZ_ijk = sum_a dy_a sum_pq D2V_a[i][p][q] J_pj J_qk + (A Z)_ijk
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
          double acc = 0.0;
          for (std::size_t p = 0; p < n; ++p) acc += a_[i * n + p] * Z[(p * n + j) * n + k];
          fz[(i * n + j) * n + k] = acc;
        }
      }
    }
    for (std::size_t a = 0; a <= d; ++a) {
      const double w = dy[a];
      if (w == 0.0) continue;
      const double* h = buf_.data() + eval_.hess_offset() + a * n * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < n; ++p) {
          for (std::size_t q = 0; q < n; ++q) {
            const double hv = h[(i * n + p) * n + q] * w;
            if (hv == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
              const double hj = hv * J[p * n + j];
              for (std::size_t k = 0; k < n; ++k) fz[(i * n + j) * n + k] += hj * J[q * n + k];
            }
          }
        }
      }
    }
  }

  // Noise field values V_1..V_d at x, packed as n x d row-major.
  void noise_values(const double* x, double* out) {
    const std::size_t n = lay_.n;
    const std::size_t d = eval_.d();
    eval_.eval_values(std::span<const double>(x, n), vals_, stack_);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 1; a <= d; ++a) out[i * d + (a - 1)] = vals_[a * n + i];
    }
  }

 private:
  const FieldEvaluator& eval_;
  Layout lay_;
  std::vector<double> buf_, stack_, a_, vals_;
};

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void check_inputs(const FieldEvaluator& eval, const Eigen::VectorXd& x0, const SampledPath& B) {
  if (static_cast<std::size_t>(x0.size()) != eval.n()) throw DomainError("solve_flow: x0 has the wrong dimension");
  if (B.dim() != eval.d()) throw DomainError("solve_flow: driver dimension differs from d");
  if (!x0.allFinite()) throw DomainError("solve_flow: x0 must be finite");
}

}  // namespace

FlowPath solve_flow(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0, const SampledPath& B,
                    const FlowOptions& options) {
  const FieldEvaluator eval(fields, options.second_variation);
  return solve_flow(eval, x0, B, options);
}

FlowPath solve_flow(const FieldEvaluator& eval, const Eigen::VectorXd& x0, const SampledPath& B,
                    const FlowOptions& options) {
  check_inputs(eval, x0, B);
  const std::size_t n = eval.n();
  const std::size_t d = eval.d();
  Stepper st(eval, options.second_variation);
  const Layout& lay = st.layout();

  std::vector<double> s(lay.size(), 0.0), f0, f1, pred(lay.size()), dy(d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = x0(static_cast<Eigen::Index>(i));
    s[lay.j() + i * n + i] = 1.0;
    s[lay.jinv() + i * n + i] = 1.0;
  }

  const std::size_t points = B.size();
  FlowPath out;
  out.X = SampledPath(B.t0(), B.dt(), points, n);
  out.J = SampledPath(B.t0(), B.dt(), points, n * n);
  out.Jinv = SampledPath(B.t0(), B.dt(), points, n * n);
  if (options.second_variation) out.Z = SampledPath(B.t0(), B.dt(), points, n * n * n);
  out.noise = SampledPath(B.t0(), B.dt(), points, std::max<std::size_t>(n * d, 1));
  out.driver = B;

  auto store = [&](std::size_t k) {
    for (std::size_t i = 0; i < n; ++i) out.X(k, i) = s[i];
    for (std::size_t q = 0; q < n * n; ++q) {
      out.J(k, q) = s[lay.j() + q];
      out.Jinv(k, q) = s[lay.jinv() + q];
    }
    if (out.Z) {
      for (std::size_t q = 0; q < n * n * n; ++q) (*out.Z)(k, q) = s[lay.zoff() + q];
    }
    if (d > 0) st.noise_values(s.data(), out.noise.row(k).data());
    // max |J Jinv - I|
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < n; ++p) acc += s[lay.j() + i * n + p] * s[lay.jinv() + p * n + j];
        dev = std::max(dev, std::abs(acc - (i == j ? 1.0 : 0.0)));
      }
    }
    out.max_consistency = std::max(out.max_consistency, dev);
    if (options.check_consistency && dev > options.consistency_tol) {
      std::ostringstream os;
      os << "J * Jinv deviates from the identity by " << dev << " (tolerance " << options.consistency_tol << ")";
      throw ConsistencyError(os.str(), B.time(k));
    }
  };

  store(0);
  for (std::size_t k = 0; k + 1 < points; ++k) {
    dy[0] = B.dt();
    for (std::size_t a = 1; a <= d; ++a) dy[a] = B(k + 1, a - 1) - B(k, a - 1);
    st.rhs(s, dy, f0);
    for (std::size_t q = 0; q < s.size(); ++q) pred[q] = s[q] + f0[q];
    st.rhs(pred, dy, f1);
    for (std::size_t q = 0; q < s.size(); ++q) s[q] += 0.5 * (f0[q] + f1[q]);
    if (!all_finite(s)) throw BlowUpError("solve_flow: non-finite state at t = " + std::to_string(B.time(k + 1)), k);
    store(k + 1);
  }
  return out;
}

SampledPath solve_state(const FieldEvaluator& eval, const Eigen::VectorXd& x0, const SampledPath& B) {
  check_inputs(eval, x0, B);
  const std::size_t n = eval.n();
  const std::size_t d = eval.d();
  std::vector<double> x(n), pred(n), v0, v1, stack;
  for (std::size_t i = 0; i < n; ++i) x[i] = x0(static_cast<Eigen::Index>(i));
  SampledPath out(B.t0(), B.dt(), B.size(), n);
  for (std::size_t i = 0; i < n; ++i) out(0, i) = x[i];
  std::vector<double> dy(d + 1), f0(n), f1(n);
  auto rhs = [&](const std::vector<double>& s, std::vector<double>& vals, std::vector<double>& f) {
    eval.eval_values(s, vals, stack);
    std::fill(f.begin(), f.end(), 0.0);
    for (std::size_t a = 0; a <= d; ++a) {
      const double w = dy[a];
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) f[i] += vals[a * n + i] * w;
    }
  };
  for (std::size_t k = 0; k + 1 < B.size(); ++k) {
    dy[0] = B.dt();
    for (std::size_t a = 1; a <= d; ++a) dy[a] = B(k + 1, a - 1) - B(k, a - 1);
    rhs(x, v0, f0);
    for (std::size_t i = 0; i < n; ++i) pred[i] = x[i] + f0[i];
    rhs(pred, v1, f1);
    for (std::size_t i = 0; i < n; ++i) x[i] += 0.5 * (f0[i] + f1[i]);
    if (!all_finite(x)) throw BlowUpError("solve_state: non-finite state at t = " + std::to_string(B.time(k + 1)), k);
    for (std::size_t i = 0; i < n; ++i) out(k + 1, i) = x[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

SampledPath second_variation_vcf(const FlowPath& flow, const expr::VectorFieldSet& fields,
                                 const Eigen::VectorXd& y0, const Eigen::VectorXd& z0) {
  const FieldEvaluator eval(fields, true);
  const std::size_t n = flow.n();
  const std::size_t d = flow.d();
  const auto ni = static_cast<Eigen::Index>(n);
  if (y0.size() != ni || z0.size() != ni) throw DomainError("second_variation_vcf: wrong vector size");
  std::vector<double> buf, stack;

  // G_k(a) = Jinv_k D^2V_a(X_k)[y_k, y_k]
  auto integrand = [&](std::size_t k) {
    const Eigen::VectorXd x = flow.x_at(k);
    eval.eval_all(std::span<const double>(x.data(), n), buf, stack);
    const Eigen::VectorXd y = flow.J_at(k) * y0;
    const Eigen::MatrixXd Ji = flow.Jinv_at(k);
    Eigen::MatrixXd g(ni, static_cast<Eigen::Index>(d + 1));
    for (std::size_t a = 0; a <= d; ++a) {
      const double* h = buf.data() + eval.hess_offset() + a * n * n * n;
      Eigen::VectorXd hv = Eigen::VectorXd::Zero(ni);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
          for (std::size_t q = 0; q < n; ++q) acc += h[(i * n + p) * n + q] * y(static_cast<Eigen::Index>(p)) * y(static_cast<Eigen::Index>(q));
        }
        hv(static_cast<Eigen::Index>(i)) = acc;
      }
      g.col(static_cast<Eigen::Index>(a)) = Ji * hv;
    }
    return g;
  };

  SampledPath out(flow.X.t0(), flow.X.dt(), flow.X.size(), n);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ni);
  Eigen::MatrixXd g_prev = integrand(0);
  auto put = [&](std::size_t k) {
    const Eigen::VectorXd z = flow.J_at(k) * (z0 + acc);
    for (std::size_t i = 0; i < n; ++i) out(k, i) = z(static_cast<Eigen::Index>(i));
  };
  put(0);
  for (std::size_t k = 0; k + 1 < flow.X.size(); ++k) {
    const Eigen::MatrixXd g_next = integrand(k + 1);
    Eigen::VectorXd dy(static_cast<Eigen::Index>(d + 1));
    dy(0) = flow.X.dt();
    for (std::size_t a = 1; a <= d; ++a) dy(static_cast<Eigen::Index>(a)) = flow.driver(k + 1, a - 1) - flow.driver(k, a - 1);
    acc += 0.5 * (g_prev + g_next) * dy;
    g_prev = g_next;
    put(k + 1);
  }
  return out;
}

AprioriReport apriori_report(const FlowPath& flow, const Eigen::VectorXd& x0, double gamma) {
  AprioriReport r;
  r.holder_B = holder_norm(flow.driver, gamma);
  r.holder_X = holder_norm(flow.X, gamma);
  r.holder_J = holder_norm(flow.J, gamma);
  const double base = 1.0 + x0.norm();
  r.bound_X = base * std::pow(1.0 + r.holder_B, 1.0 / gamma);
  r.bound_J = base * std::exp(std::pow(r.holder_B, 1.0 / gamma));
  r.ratio_X = r.holder_X / r.bound_X;
  r.ratio_J = r.holder_J / r.bound_J;
  return r;
}

AprioriFit apriori_fit(const std::vector<AprioriReport>& reports, double gamma) {
  AprioriFit fit;
  fit.paths = reports.size();
  if (reports.empty()) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : reports) {
    fit.max_ratio_X = std::max(fit.max_ratio_X, r.ratio_X);
    fit.max_ratio_J = std::max(fit.max_ratio_J, r.ratio_J);
    const double x = std::pow(r.holder_B, 1.0 / gamma);
    const double y = std::log(std::max(r.holder_J, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    fit.envelope = std::max(fit.envelope, std::log(std::max(r.holder_J, std::exp(1.0))) /
                                              std::pow(1.0 + r.holder_B, 1.0 / gamma));
  }
  const double m = static_cast<double>(reports.size());
  const double den = m * sxx - sx * sx;
  if (den > 0.0) {
    fit.slope = (m * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / m;
  }
  fit.finite = std::isfinite(fit.max_ratio_X) && std::isfinite(fit.max_ratio_J) && std::isfinite(fit.envelope);
  return fit;
}

}  // namespace fbmhypo
