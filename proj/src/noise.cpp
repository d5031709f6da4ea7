#include "fbmhypo/noise.hpp"

#include "fbmhypo/errors.hpp"
#include "fbmhypo/parallel.hpp"
#include "fbmhypo/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fbmhypo {

namespace {

void check_hurst(double H) {
  if (!(H > 0.5 && H < 1.0)) throw DomainError("Hurst parameter must lie in (1/2, 1)");
}

// J(d, s) = int_0^s (d+u)^a u^a du, d > 0.
double cross_moment(double d, double s, double a) {
  if (s <= 0.0) return 0.0;
  auto smooth = [d, a](double u) { return std::pow(d + u, a); };
  const double split = std::min(s, d);
  double v = quad::integrate_left_power(smooth, 0.0, split, a);
  if (s > split) {
    v += quad::integrate([d, a](double u) { return std::pow((d + u) * u, a); }, split, s, 1e-14);
  }
  return v;
}

}  // namespace

double volterra_normalizer(double H) {
  return std::sqrt(2.0 * H * std::tgamma(1.5 - H) / (std::tgamma(H + 0.5) * std::tgamma(2.0 - 2.0 * H)));
}

HurstParams HurstParams::make(double H, double gamma, double delta) {
  std::ostringstream why;
  if (!(H > 0.5 && H < 1.0)) {
    why << "H = " << H << " must satisfy 1/2 < H < 1";
  } else if (!(gamma > 0.5 && gamma < H)) {
    why << "gamma = " << gamma << " must satisfy 1/2 < gamma < H = " << H;
  } else if (!(delta > 0.0)) {
    why << "delta = " << delta << " must be positive";
  } else if (!(gamma + delta > H && gamma + delta < 1.0)) {
    why << "gamma + delta = " << gamma + delta << " must satisfy H = " << H << " < gamma + delta < 1";
  }
  if (!why.str().empty()) throw DomainError(why.str());
  HurstParams p;
  p.H = H;
  p.gamma = gamma;
  p.delta = delta;
  p.alpha_H = volterra_normalizer(H);
  // alpha_{1-H} from the same closed form, valid for 1 - H in (0, 1/2).
  p.gamma_H_product = (H - 0.5) * p.alpha_H * volterra_normalizer(1.0 - H);
  p.drift_constant = -std::sin(std::numbers::pi * (H - 0.5)) / std::numbers::pi;
  return p;
}

HurstParams HurstParams::with_defaults(double H) {
  check_hurst(H);
  const double gamma = 0.5 * (0.5 + H);
  return make(H, gamma, 0.5 * (1.0 + H) - gamma);
}

double kernel_g(double x, double H) {
  if (!(x > 0.0)) throw DomainError("kernel_g: x must be positive");
  check_hurst(H);
  const double e = H - 2.5;
  auto f = [x, e](double u) { return std::pow(u + x, e); };
  // (u + x)^(H-5/2) is sharply peaked at u = 0 for small x: integrate [0, 1/2]
  // adaptively on panels growing geometrically in u + x, and put the
  // (1-u)^(1/2-H) endpoint weight on [1/2, 1] into a Gauss-Jacobi rule.
  double inner = 0.0;
  double lo = 0.0;
  double width = x;
  while (lo < 0.5) {
    const double hi = std::min(0.5, lo + width);
    inner += quad::integrate([&](double u) { return f(u) * std::pow(1.0 - u, 0.5 - H); }, lo, hi, 1e-14);
    lo = hi;
    width *= 2.0;
  }
  inner += quad::integrate_right_power(f, 0.5, 1.0, 0.5 - H);
  return std::pow(x, H - 0.5) + (H - 1.5) * x * inner;
}

double kernel_g_closed(double x, double H) {
  if (!(x > 0.0)) throw DomainError("kernel_g: x must be positive");
  return std::pow(x, H + 0.5) / (1.0 + x);
}

double kernel_xdg(double x, double H) {
  return kernel_g_closed(x, H) * ((H + 0.5) - x / (1.0 + x));
}

// ---------------------------------------------------------------------------

FbmSampler::FbmSampler(double H, double t0, double dt, std::size_t points)
    : H_(H), t0_(t0), dt_(dt), points_(points) {
  if (!(H >= 0.5 && H < 1.0)) throw DomainError("FbmSampler: H must lie in [1/2, 1)");
  if (!(dt > 0.0) || points < 2) throw DomainError("FbmSampler: need dt > 0 and two grid points");
  const double k0 = -t0 / dt;
  const double r0 = std::round(k0);
  if (std::abs(k0 - r0) > 1e-9 || r0 < 0.0 || r0 > static_cast<double>(points - 1)) {
    throw DomainError("FbmSampler: t = 0 must be a grid point");
  }
  zero_index_ = static_cast<std::size_t>(r0);
  const std::size_t m = points - 1;
  if (m > 4096) throw DomainError("FbmSampler: at most 4096 non-zero grid points");

  std::vector<double> times;
  times.reserve(m);
  for (std::size_t k = 0; k < points; ++k) {
    if (k != zero_index_) times.push_back((static_cast<double>(k) - r0) * dt);
  }
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = fbm_covariance(times[i], times[j], H);
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "fBm covariance is not numerically positive definite: eigenvalues in ["
       << es.eigenvalues().minCoeff() << ", " << es.eigenvalues().maxCoeff() << "] on " << m
       << " points";
    throw NumericalError(os.str());
  }
  lower_ = llt.matrixL();
}

Eigen::MatrixXd FbmSampler::apply(const Eigen::MatrixXd& z) const {
  if (z.rows() != lower_.rows()) throw DomainError("FbmSampler::apply: wrong number of normals");
  const Eigen::MatrixXd inner = lower_.triangularView<Eigen::Lower>() * z;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points_), z.cols());
  const auto z0 = static_cast<Eigen::Index>(zero_index_);
  out.topRows(z0) = inner.topRows(z0);
  out.bottomRows(inner.rows() - z0) = inner.bottomRows(inner.rows() - z0);
  return out;
}

SampledPath FbmSampler::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(lower_.rows(), 1);
  for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, 0) = normal(rng);
  const Eigen::MatrixXd x = apply(z);
  RowMatrix values = x;
  return SampledPath(t0_, dt_, std::move(values));
}

std::vector<SampledPath> FbmSampler::sample(std::size_t n_paths, std::uint64_t seed) const {
  std::vector<SampledPath> out(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    auto rng = make_engine(seed, i);
    out[i] = sample(rng);
  }
  return out;
}

std::vector<SampledPath> fbm_sample_exact(double H, double t0, double dt, std::size_t points,
                                          std::size_t n_paths, std::uint64_t seed) {
  return FbmSampler(H, t0, dt, points).sample(n_paths, seed);
}

FbmSampler past_sampler(double H, double past_dt, std::size_t past_bins) {
  return FbmSampler(H, -past_dt * static_cast<double>(past_bins), past_dt, past_bins + 1);
}

// ---------------------------------------------------------------------------

ConditionalDrift::ConditionalDrift(const HurstParams& p, double past_dt, std::size_t past_bins, double dt,
                                   std::size_t bins, DriftKernel kernel)
    : params_(p), past_dt_(past_dt), past_bins_(past_bins), dt_(dt), bins_(bins), kernel_(kernel) {
  if (past_bins < 1) throw DomainError("conditional drift: empty past window");
  if (!(past_dt > 0.0) || !(dt > 0.0) || bins < 1) throw DomainError("conditional drift: bad grid");
  const double H = p.H;
  const double c = p.drift_constant;
  const double hp = past_dt;
  const double window = past_window();
  const bool deriv = kernel == DriftKernel::TimesDerivative;
  const std::size_t np = past_bins;

  // Factors of the kernel written in three variables: r (past lag), y = r/t on
  // the first bin, x = t/r beyond the window.
  auto psi = [H, deriv](double y) {
    const double base = 1.0 / (1.0 + y);
    return deriv ? base * ((H + 0.5) - base) : base;
  };
  auto chi = [H, deriv](double x) {
    const double base = 1.0 / (1.0 + x);
    return deriv ? base * ((H + 0.5) - x * base) : base;
  };

  const quad::Rule gl = quad::gauss_legendre(10);
  const std::size_t nq = gl.nodes.size();
  std::vector<double> lambda(nq), rnode(np * nq), rpow(np * nq);
  for (std::size_t q = 0; q < nq; ++q) lambda[q] = 0.5 * (1.0 + gl.nodes[q]);
  for (std::size_t j = 1; j < np; ++j) {
    for (std::size_t q = 0; q < nq; ++q) {
      const double r = hp * (static_cast<double>(j) + lambda[q]);
      rnode[j * nq + q] = r;
      rpow[j * nq + q] = std::pow(r, -H - 0.5);
    }
  }

  weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bins + 1), static_cast<Eigen::Index>(np + 1));
  std::vector<double> row(np + 1);
  for (std::size_t k = 1; k <= bins; ++k) {
    const double t = dt * static_cast<double>(k);
    std::fill(row.begin(), row.end(), 0.0);

    // First bin: omega(-r) = omega_1 r / hp, and int_0^hp g(t/r) dr = t int_0^{hp/t} y^(1/2-H) psi(y) dy.
    const double Y = hp / t;
    double first = quad::integrate_left_power(psi, 0.0, std::min(Y, 1.0), 0.5 - H);
    if (Y > 1.0) {
      first += quad::integrate([&](double y) { return std::pow(y, 0.5 - H) * psi(y); }, 1.0, Y, 1e-13);
    }
    row[1] += c * (t / hp) * first;

    // Interior bins, kernel g(t/r)/r = t^(H+1/2) r^(-H-1/2) / (r + t).
    const double tH = std::pow(t, H + 0.5);
    for (std::size_t j = 1; j < np; ++j) {
      double wl = 0.0, wr = 0.0;
      for (std::size_t q = 0; q < nq; ++q) {
        const double r = rnode[j * nq + q];
        double kern = tH * rpow[j * nq + q] / (r + t);
        if (deriv) kern *= (H + 0.5) - t / (r + t);
        const double a = kern * 0.5 * hp * gl.weights[q];
        wl += a * (1.0 - lambda[q]);
        wr += a * lambda[q];
      }
      row[j] += c * wl;
      row[j + 1] += c * wr;
    }

    // Beyond the window the past is frozen at omega(-window).
    row[np] += c * quad::integrate_left_power(chi, 0.0, t / window, H - 0.5);

    for (std::size_t j = 0; j <= np; ++j) {
      weights_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(np - j)) = row[j];
    }
  }
}

SampledPath ConditionalDrift::apply(const SampledPath& omega) const {
  if (omega.size() != past_bins_ + 1 || std::abs(omega.dt() - past_dt_) > 1e-12 * past_dt_ ||
      std::abs(omega.t_end()) > 1e-9 * past_dt_) {
    throw DomainError("conditional drift: past path does not match the precomputed grid");
  }
  for (std::size_t c = 0; c < omega.dim(); ++c) {
    if (std::abs(omega(past_bins_, c)) > 1e-12) throw DomainError("conditional drift: omega(0) must vanish");
  }
  RowMatrix values = weights_ * omega.values();
  return SampledPath(0.0, dt_, std::move(values));
}

Eigen::VectorXd ConditionalDrift::tail_budget(double omega_norm) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins_ + 1));
  const double H = params_.H;
  const double window = past_window();
  const bool deriv = kernel_ == DriftKernel::TimesDerivative;
  for (std::size_t k = 1; k <= bins_; ++k) {
    const double t = dt_ * static_cast<double>(k);
    auto f = [&](double r) {
      double kern = std::pow(t, H + 0.5) * std::pow(r, -H - 0.5) / (r + t);
      if (deriv) kern *= (H + 0.5) - t / (r + t);
      return std::abs(kern) * std::pow(r - window, params_.gamma) * std::pow(1.0 + r + window, params_.delta);
    };
    out(static_cast<Eigen::Index>(k)) =
        std::abs(params_.drift_constant) * omega_norm * quad::integrate(f, window, INFINITY, 1e-10);
  }
  return out;
}

namespace {

DriftResult drift_impl(const SampledPath& omega, const HurstParams& p, double dt, std::size_t bins,
                       DriftKernel kernel) {
  if (omega.bins() < 1) throw DomainError("conditional drift: empty past window");
  const ConditionalDrift op(p, omega.dt(), omega.bins(), dt, bins, kernel);
  DriftResult r;
  r.path = op.apply(omega);
  r.omega_norm = weighted_norm(omega, p.gamma, p.delta);
  r.tail_budget = op.tail_budget(r.omega_norm);
  return r;
}

}  // namespace

DriftResult conditional_drift_G(const SampledPath& omega, const HurstParams& p, double dt, std::size_t bins) {
  return drift_impl(omega, p, dt, bins, DriftKernel::G);
}

DriftResult f_omega(const SampledPath& omega, const HurstParams& p, double dt, std::size_t bins) {
  return drift_impl(omega, p, dt, bins, DriftKernel::TimesDerivative);
}

// ---------------------------------------------------------------------------

VolterraKernel::VolterraKernel(double H, double dt, std::size_t bins) : dt_(dt), bins_(bins) {
  check_hurst(H);
  if (!(dt > 0.0) || bins < 1) throw DomainError("VolterraKernel: bad grid");
  const double a = H + 0.5;
  const double scale = volterra_normalizer(H) * std::pow(dt, H - 0.5) / a;
  w_.assign(bins + 1, 0.0);
  for (std::size_t p = 1; p <= bins; ++p) {
    const double pp = static_cast<double>(p);
    w_[p] = scale * (std::pow(pp, a) - std::pow(pp - 1.0, a));
  }
}

SampledPath VolterraKernel::apply(const RowMatrix& dW) const {
  if (static_cast<std::size_t>(dW.rows()) != bins_) throw DomainError("VolterraKernel: wrong number of increments");
  SampledPath out(0.0, dt_, bins_ + 1, static_cast<std::size_t>(dW.cols()));
  for (std::size_t k = 1; k <= bins_; ++k) {
    for (Eigen::Index c = 0; c < dW.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += w_[k - j] * dW(static_cast<Eigen::Index>(j), c);
      out(k, static_cast<std::size_t>(c)) = acc;
    }
  }
  return out;
}

Eigen::MatrixXd VolterraKernel::matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bins_ + 1), static_cast<Eigen::Index>(bins_));
  for (std::size_t k = 1; k <= bins_; ++k) {
    for (std::size_t j = 0; j < k; ++j) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = w_[k - j];
  }
  return m;
}

SampledPath volterra_tilde_B(double H, const RowMatrix& dW, double dt) {
  return VolterraKernel(H, dt, static_cast<std::size_t>(dW.rows())).apply(dW);
}

RowMatrix draw_increments(std::mt19937_64& rng, std::size_t bins, std::size_t d, double dt) {
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  RowMatrix dW(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < dW.rows(); ++j) {
    for (Eigen::Index c = 0; c < dW.cols(); ++c) dW(j, c) = normal(rng);
  }
  return dW;
}

// ---------------------------------------------------------------------------

ConditionalCov conditional_cov_forms(double s, double t, double H) {
  check_hurst(H);
  if (!(s >= 0.0 && s < t)) throw DomainError("conditional_cov: need 0 <= s < t");
  const double a = H - 0.5;
  const double a2 = std::pow(volterra_normalizer(H), 2);
  const double d = t - s;
  ConditionalCov out;
  out.direct = a2 * (std::pow(t, 2 * H) / (2 * H) + std::pow(s, 2 * H) / (2 * H) - 2.0 * cross_moment(d, s, a));

  const double X = s / d;
  auto sq = [a](double x) {
    const double v = std::pow(1.0 + x, a) - std::pow(x, a);
    return v * v;
  };
  double tail = quad::integrate_singular(sq, 0.0, std::min(X, 1.0), 1e-14);
  if (X > 1.0) tail += quad::integrate(sq, 1.0, X, 1e-14);
  out.increment = a2 * std::pow(d, 2 * H) * (1.0 / (2 * H) + tail);
  return out;
}

double conditional_cov(double s, double t, double H) {
  const ConditionalCov f = conditional_cov_forms(s, t, H);
  if (std::abs(f.direct - f.increment) > 1e-6 * std::abs(f.increment)) {
    std::ostringstream os;
    os << "conditional_cov: the two forms disagree at (s,t) = (" << s << ", " << t << "): " << f.direct
       << " vs " << f.increment;
    throw ConsistencyError(os.str(), t);
  }
  return f.direct;
}

double tilde_covariance(double s, double t, double H) {
  check_hurst(H);
  if (s < 0.0 || t < 0.0) throw DomainError("tilde_covariance: times must be non-negative");
  const double lo = std::min(s, t);
  const double d = std::abs(t - s);
  const double a2 = std::pow(volterra_normalizer(H), 2);
  if (d == 0.0) return a2 * std::pow(lo, 2 * H) / (2 * H);
  return a2 * cross_moment(d, lo, H - 0.5);
}

double fbm_covariance(double s, double t, double H) {
  return 0.5 * (std::pow(std::abs(s), 2 * H) + std::pow(std::abs(t), 2 * H) - std::pow(std::abs(t - s), 2 * H));
}

double weighted_norm(const SampledPath& omega, double gamma, double delta) {
  const std::size_t n = omega.size();
  const double dt = omega.dt();
  std::vector<double> lag(n);
  for (std::size_t p = 1; p < n; ++p) lag[p] = std::pow(static_cast<double>(p) * dt, gamma);
  const bool one_sided = omega.t0() >= 0.0 || omega.t_end() <= 0.0;
  // On one side of 0, |t| + |s| depends on i + j only.
  std::vector<double> growth;
  if (one_sided) {
    growth.resize(2 * n);
    for (std::size_t q = 0; q < 2 * n; ++q) {
      const double sum = std::abs(2.0 * omega.t0() + static_cast<double>(q) * dt);
      growth[q] = std::pow(1.0 + sum, delta);
    }
  }
  double best = 0.0;
  for (std::size_t c = 0; c < omega.dim(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = omega(i, c);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double g = one_sided
                             ? growth[i + j]
                             : std::pow(1.0 + std::abs(omega.time(i)) + std::abs(omega.time(j)), delta);
        const double v = std::abs(omega(j, c) - wi) / (lag[j - i] * g);
        if (v > best) best = v;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

ConditionedNoise::ConditionedNoise(const HurstParams& p, SampledPath omega, double dt, std::size_t bins)
    : params_(p), omega_(std::move(omega)), volterra_(p.H, dt, bins) {
  DriftResult r = conditional_drift_G(omega_, p, dt, bins);
  m_ = std::move(r.path);
  tail_budget_ = std::move(r.tail_budget);
}

RowMatrix ConditionedNoise::draw(std::mt19937_64& rng) const {
  return draw_increments(rng, bins(), dim(), dt());
}

SampledPath ConditionedNoise::driver(const RowMatrix& dW) const { return volterra_.apply(dW) + m_; }

NoiseSplit ConditionedNoise::split(const RowMatrix& dW) const {
  NoiseSplit s;
  s.omega = omega_;
  s.m = m_;
  s.tildeB = volterra_.apply(dW);
  s.W_increments = dW;
  return s;
}

}  // namespace fbmhypo
