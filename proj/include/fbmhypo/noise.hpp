#pragma once

// Fractional Brownian motion for H in (1/2, 1): exact sampling, and the split
// of the future of the noise into a part independent of the past,
//
//   B(t) = tildeB(t) + m(t),   tildeB(t) = alpha_H int_0^t (t-s)^(H-1/2) dW(s),
//
// with m = G(omega) a deterministic functional of the past omega(-r) = B(-r).

#include "fbmhypo/path.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace fbmhypo {

struct HurstParams {
  double H = 0.7;
  double gamma = 0.6;  // Hölder exponent of the noise space
  double delta = 0.25; // growth exponent of the noise space
  double alpha_H = 0;  // normaliser of the Volterra part
  // (H - 1/2) alpha_H alpha_{1-H}; kept for reporting only.
  double gamma_H_product = 0;
  // Constant in front of the past integral in G, -sin(pi (H - 1/2)) / pi.
  double drift_constant = 0;

  /// Validates 1/2 < gamma < H < 1 and H < gamma + delta < 1 and fills in
  /// the derived constants. Throws DomainError with the violated relation.
  static HurstParams make(double H, double gamma, double delta);

  /// gamma = (1/2 + H)/2 and delta = (1 + H)/2 - gamma, i.e. gamma + delta
  /// halfway between H and 1.
  static HurstParams with_defaults(double H);
};

/// sqrt(2H Gamma(3/2 - H) / (Gamma(H + 1/2) Gamma(2 - 2H))).
double volterra_normalizer(double H);

/// The kernel of G, g(x) = x^(H-1/2) + (H - 3/2) x int_0^1 (u+x)^(H-5/2) (1-u)^(1/2-H) du,
/// evaluated by quadrature. Throws DomainError for x <= 0.
double kernel_g(double x, double H);

/// Closed form of the same kernel, x^(H+1/2) / (1 + x).
double kernel_g_closed(double x, double H);

/// x g'(x) = g(x) ((H + 1/2) - x/(1 + x)).
double kernel_xdg(double x, double H);

// ---------------------------------------------------------------------------
// Exact sampling

/// Dense Cholesky sampler of fBm on a uniform grid containing t = 0.
class FbmSampler {
 public:
  /// Grid t0 + k dt, k < points; 0 must be a grid point. H in [1/2, 1).
  /// At most 4096 non-zero grid points.
  FbmSampler(double H, double t0, double dt, std::size_t points);

  double H() const noexcept { return H_; }
  std::size_t points() const noexcept { return points_; }

  /// One path, using normals drawn from `rng`.
  SampledPath sample(std::mt19937_64& rng) const;

  /// n_paths paths; path i is driven by make_engine(seed, i).
  std::vector<SampledPath> sample(std::size_t n_paths, std::uint64_t seed) const;

  /// Batched form: column i of the result holds path i on the grid, with
  /// the normals taken from z (rows = non-zero grid points).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const;

 private:
  double H_;
  double t0_;
  double dt_;
  std::size_t points_;
  std::size_t zero_index_;
  Eigen::MatrixXd lower_;  // Cholesky factor over the non-zero grid points
};

std::vector<SampledPath> fbm_sample_exact(double H, double t0, double dt, std::size_t points,
                                          std::size_t n_paths, std::uint64_t seed);

/// Sampler of pasts omega on [-past_dt * past_bins, 0] (omega(0) = 0).
FbmSampler past_sampler(double H, double past_dt, std::size_t past_bins);

// ---------------------------------------------------------------------------
// The operator G and its t d/dt variant

enum class DriftKernel { G, TimesDerivative };

/// Precomputed linear map omega -> G omega (or t d/dt G omega) between a past
/// grid [-past_dt * past_bins, 0] and a future grid {k dt, k <= bins}.
///
/// On each past bin the path is interpolated linearly and the kernel is
/// integrated exactly up to quadrature error: Gauss-Jacobi on the first bin
/// (where the integrand carries the r^(1/2-H)-type singularity after a change
/// of variables) and Gauss-Legendre elsewhere. Beyond the window the past is
/// frozen at its last value, which is integrated in closed form; the error of
/// that choice is bounded by tail_budget().
class ConditionalDrift {
 public:
  ConditionalDrift(const HurstParams& p, double past_dt, std::size_t past_bins, double dt,
                   std::size_t bins, DriftKernel kernel = DriftKernel::G);

  double past_window() const noexcept { return past_dt_ * static_cast<double>(past_bins_); }
  double past_dt() const noexcept { return past_dt_; }
  std::size_t past_bins() const noexcept { return past_bins_; }
  double dt() const noexcept { return dt_; }
  std::size_t bins() const noexcept { return bins_; }

  /// Rows: future grid points; columns: past grid points in time order.
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

  /// Throws DomainError if the grid differs or omega(0) != 0.
  SampledPath apply(const SampledPath& omega) const;

  /// Bound on the truncation error at each future grid point for a past of
  /// weighted norm `omega_norm` (see weighted_norm).
  Eigen::VectorXd tail_budget(double omega_norm) const;

 private:
  HurstParams params_;
  double past_dt_;
  std::size_t past_bins_;
  double dt_;
  std::size_t bins_;
  DriftKernel kernel_;
  Eigen::MatrixXd weights_;
};

struct DriftResult {
  SampledPath path;           // m (or f_omega)
  Eigen::VectorXd tail_budget;  // per future grid point
  double omega_norm = 0;      // weighted norm of the past used for the budget
};

/// m = G omega on {k dt, k <= bins}; omega lives on its own uniform grid
/// ending at 0.
DriftResult conditional_drift_G(const SampledPath& omega, const HurstParams& p, double dt, std::size_t bins);

/// f_omega(t) = t (d/dt) G omega(t), through the x g'(x) kernel.
DriftResult f_omega(const SampledPath& omega, const HurstParams& p, double dt, std::size_t bins);

// ---------------------------------------------------------------------------
// The Volterra part

/// tildeB(t_k) = alpha_H sum_j w_{k-j} dW_j where w_p is the exact bin
/// average of (t_k - s)^(H-1/2) over bin j = k - p.
class VolterraKernel {
 public:
  VolterraKernel(double H, double dt, std::size_t bins);

  std::size_t bins() const noexcept { return bins_; }
  double dt() const noexcept { return dt_; }
  /// w_p for p = 1..bins (index 0 unused), times alpha_H.
  const std::vector<double>& weights() const noexcept { return w_; }

  /// dW: bins x d increments. Returns tildeB on the bins + 1 grid points.
  SampledPath apply(const RowMatrix& dW) const;

  /// Lower-triangular (bins+1) x bins matrix of the map dW -> tildeB.
  Eigen::MatrixXd matrix() const;

 private:
  double dt_;
  std::size_t bins_;
  std::vector<double> w_;
};

SampledPath volterra_tilde_B(double H, const RowMatrix& dW, double dt);

/// Gaussian increments N(0, dt), bins x d.
RowMatrix draw_increments(std::mt19937_64& rng, std::size_t bins, std::size_t d, double dt);

// ---------------------------------------------------------------------------
// Covariances and norms

/// Both expressions of f(s,t) = E|tildeB(t) - tildeB(s)|^2 (alpha_H included).
struct ConditionalCov {
  double direct = 0;     // t^2H/2H + s^2H/2H - 2 int_0^s (t-r)^a (s-r)^a dr, a = H - 1/2
  double increment = 0;  // |t-s|^2H (1/2H + int_0^{s/|t-s|} ((1+x)^a - x^a)^2 dx)
};

ConditionalCov conditional_cov_forms(double s, double t, double H);

/// f(s,t) by the direct form, checked against the increment form to 1e-6
/// relative (ConsistencyError otherwise). Requires 0 <= s < t.
double conditional_cov(double s, double t, double H);

/// Cov(tildeB(s), tildeB(t)) = alpha_H^2 int_0^min (t-r)^a (s-r)^a dr.
double tilde_covariance(double s, double t, double H);

/// Covariance of two-sided fBm.
double fbm_covariance(double s, double t, double H);

/// sup over grid pairs of |w(t)-w(s)| / (|t-s|^gamma (1+|t|+|s|)^delta),
/// maximised over components.
double weighted_norm(const SampledPath& omega, double gamma, double delta);

/// The noise of one conditioned run: its past, the conditional mean of the
/// future, the independent part and the increments behind it.
struct NoiseSplit {
  SampledPath omega;
  SampledPath m;
  SampledPath tildeB;
  RowMatrix W_increments;

  SampledPath driver() const { return tildeB + m; }
};

/// A fixed past together with the machinery to draw conditioned futures.
class ConditionedNoise {
 public:
  ConditionedNoise(const HurstParams& p, SampledPath omega, double dt, std::size_t bins);

  const HurstParams& params() const noexcept { return params_; }
  const SampledPath& omega() const noexcept { return omega_; }
  const SampledPath& m() const noexcept { return m_; }
  const Eigen::VectorXd& tail_budget() const noexcept { return tail_budget_; }
  const VolterraKernel& volterra() const noexcept { return volterra_; }
  double dt() const noexcept { return volterra_.dt(); }
  std::size_t bins() const noexcept { return volterra_.bins(); }
  std::size_t dim() const noexcept { return omega_.dim(); }

  RowMatrix draw(std::mt19937_64& rng) const;
  /// tildeB + m for the given increments.
  SampledPath driver(const RowMatrix& dW) const;
  NoiseSplit split(const RowMatrix& dW) const;

 private:
  HurstParams params_;
  SampledPath omega_;
  SampledPath m_;
  Eigen::VectorXd tail_budget_;
  VolterraKernel volterra_;
};

}  // namespace fbmhypo
