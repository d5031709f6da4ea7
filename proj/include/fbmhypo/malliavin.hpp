#pragma once

// The operator A v = int_0^t Jinv_s V(X_s) v(s) ds, its adjoint, the
// (cut-off) Malliavin matrices built from them, the control v solving
// A v = xi, and Monte-Carlo quantities built on conditioned noise.

#include "fbmhypo/expr.hpp"
#include "fbmhypo/flow.hpp"
#include "fbmhypo/noise.hpp"
#include "fbmhypo/path.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace fbmhypo {

/// h_T(s) = 1 for s <= T/2, 0 for s >= 3T/4, and in between
/// q(3T/4 - s) / (q(3T/4 - s) + q(s - T/2)) with q(u) = exp(-1/u).
double cutoff_value(double s, double T);

struct CutoffFunction {
  double T = 1;
  SampledPath values;  // one column
};

/// h_T sampled on t0 + k dt, k < points.
CutoffFunction cutoff_h(double T, double t0, double dt, std::size_t points);

/// A_{t_end} v by the trapezoid rule; v has d columns on the flow grid.
Eigen::VectorXd operator_A(const FlowPath& flow, const SampledPath& v, double t_end);

/// (A* xi)(s) = V(X_s)^T Jinv_s^T xi, d columns.
SampledPath operator_A_adjoint(const FlowPath& flow, const Eigen::VectorXd& xi);

/// int_0^T h(s) (Jinv V)(Jinv V)^T ds by the trapezoid rule, symmetrised.
/// Without h this is the reduced matrix C_hat.
Eigen::MatrixXd malliavin_matrix(const FlowPath& flow, const CutoffFunction* h = nullptr);

double lambda_min(const Eigen::MatrixXd& C);

struct Control {
  SampledPath v;        // d columns on the flow grid
  double residual = 0;  // |A v - xi|
  double lambda_min = 0;
};

/// v(s) = h(s) (A* C^-1 xi)(s). Throws NumericalError when lambda_min(C)
/// is at most `min_lambda`.
Control control_v(const FlowPath& flow, const Eigen::VectorXd& xi, const CutoffFunction& h,
                  double min_lambda = 1e-10);

/// Extends a path defined on [0, T] by zeros up to `horizon` on the same step.
SampledPath extend_by_zero(const SampledPath& v, double horizon);

struct MalliavinReport {
  Eigen::MatrixXd C_T;
  Eigen::MatrixXd C_hat;
  double lambda_min = 0;
  double lambda_min_hat = 0;
  double loewner_gap = 0;  // lambda_min(C_hat - C_T)
  double control_residual = 0;
  double M1 = 0, M1_stderr = 0;
  std::optional<double> M2, M2_stderr;
};

/// Matrices and control residual for one flow.
MalliavinReport malliavin_report(const FlowPath& flow, const Eigen::VectorXd& xi);

/// (F(W + eps e) - F(W - eps e)) / (2 eps) where e bumps increment `bin` of
/// component `component`. This is the derivative density on that bin.
double malliavin_derivative_fd(const std::function<double(const RowMatrix&)>& F, const RowMatrix& W,
                               std::size_t bin, std::size_t component, double eps);

/// Perturbs the driver by eps int_0^t v and compares the response of X_T with
/// J_{0,T} A v.
struct ResponseCheck {
  Eigen::VectorXd finite_difference;
  Eigen::VectorXd predicted;
  double rel_err = 0;
};

ResponseCheck first_order_response(const FieldEvaluator& eval, const Eigen::VectorXd& x0, const FlowPath& flow,
                                   const SampledPath& v, double eps);

struct MonteCarloSettings {
  std::size_t n_mc = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct SkorohodTerms {
  double M1 = 0, M1_stderr = 0;
  double M2 = 0, M2_stderr = 0;
  bool with_M2 = false;
  std::size_t accepted = 0;
  std::size_t excluded = 0;  // control construction failed
  std::vector<double> tail;  // int_1^S |v~|^2 ds for S = 2, 4, 8 (mean)
  double tail_ratio = 0;     // (tail(8) - tail(4)) / tail(8)
};

/// M1 = E int_0^S |v~|^2 and (optionally) M2 = E int int |D_t v~(s)|^2 with
/// v~ = D^(H-1/2) v on [0, S], S = horizon >= 8.
SkorohodTerms skorohod_terms(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                             const ConditionedNoise& noise, const Eigen::VectorXd& xi,
                             const MonteCarloSettings& mc, bool with_M2, double horizon = 8.0);

struct TailTable {
  std::vector<double> eps;
  std::vector<double> p_hat;
  std::vector<double> stderr_;
  std::size_t n_mc = 0;
  std::size_t failed = 0;  // flows that blew up or lost consistency
  double slope = 0;        // least-squares slope of log p_hat against log eps
  bool strictly_decreasing = false;
  std::vector<double> lambdas;  // per replica, NaN for failures
};

/// Empirical P(lambda_min(C_T) <= eps) over conditioned draws with the past
/// fixed.
TailTable lambda_min_tail(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                          const ConditionedNoise& noise, const std::vector<double>& eps,
                          const MonteCarloSettings& mc, const FlowOptions& options = {});

/// Fits the tail table to the given lambdas (used by lambda_min_tail).
TailTable tail_from_samples(const std::vector<double>& lambdas, const std::vector<double>& eps);

struct GradientResult {
  double estimate = 0;
  double stderr_ = 0;
  double fd_oracle = 0;
  double fd_stderr = 0;
  double rel_err = 0;
  double M1 = 0;  // int |theta|^2, the variance factor of the weight
};

/// E[psi(X) sum_j <theta_j, dW_j>] with theta the bin averages of
/// D^(H-1/2) v / (alpha_H Gamma(H+1/2)) and A v = xi. Only for field sets
/// with constant noise fields and affine drift, where v does not depend on
/// the noise (UnsupportedError otherwise). The oracle is the central
/// difference of x -> E psi(X^x) in direction xi with common random numbers.
GradientResult gradient_estimator(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0,
                                  const ConditionedNoise& noise, const std::function<double(const SampledPath&)>& psi,
                                  const Eigen::VectorXd& xi, const MonteCarloSettings& mc, double fd_dx = 1e-2);

}  // namespace fbmhypo
