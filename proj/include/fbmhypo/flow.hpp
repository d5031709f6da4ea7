#pragma once

// Pathwise solution of dX = V0(X) dt + sum_i Vi(X) dB_i for a Hölder driver
// with exponent above 1/2, together with the Jacobian J of the flow, its
// inverse and optionally the second variation Z.
//
// Every component is stepped by the same explicit trapezoid (Heun) scheme:
// a left-point predictor followed by averaging the vector field at both ends
// of the step. For Young drivers this scheme has local error of order 2*gamma.

#include "fbmhypo/expr.hpp"
#include "fbmhypo/path.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace fbmhypo {

struct FlowOptions {
  bool second_variation = false;
  /// Abort with ConsistencyError when max|J Jinv - I| exceeds this.
  double consistency_tol = 1e-6;
  bool check_consistency = true;
};

struct FlowPath {
  SampledPath X;     // n columns
  SampledPath J;     // n*n columns, row-major (i, j)
  SampledPath Jinv;  // n*n columns
  std::optional<SampledPath> Z;  // n*n*n columns, (i, j, k) = d^2 X_i / dx_j dx_k
  SampledPath noise;  // n*d columns: V_a(X)_i at column i*d + (a-1)
  SampledPath driver;
  double max_consistency = 0;  // max over the grid of max|J Jinv - I|

  std::size_t n() const noexcept { return X.dim(); }
  std::size_t d() const noexcept { return driver.dim(); }

  Eigen::VectorXd x_at(std::size_t k) const;
  Eigen::MatrixXd J_at(std::size_t k) const;
  Eigen::MatrixXd Jinv_at(std::size_t k) const;
  /// n x d matrix [V_1(X_k) ... V_d(X_k)].
  Eigen::MatrixXd V_at(std::size_t k) const;
  /// Z_k(y, w) as an n-vector.
  Eigen::VectorXd Z_contract(std::size_t k, const Eigen::VectorXd& y, const Eigen::VectorXd& w) const;
};

/// Compiled field set: values, Jacobians and (on request) Hessians of all
/// fields evaluated in one pass.
class FieldEvaluator {
 public:
  FieldEvaluator(const expr::VectorFieldSet& fields, bool hessians);

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  bool has_hessians() const noexcept { return hessians_; }

  /// Layout of `out`: values (d+1)*n, then Jacobians (d+1)*n*n (row-major),
  /// then Hessians (d+1)*n*n*n when requested.
  void eval_all(std::span<const double> x, std::vector<double>& out, std::vector<double>& stack) const;
  void eval_values(std::span<const double> x, std::vector<double>& out, std::vector<double>& stack) const;

  std::size_t jac_offset() const noexcept { return (d_ + 1) * n_; }
  std::size_t hess_offset() const noexcept { return jac_offset() + (d_ + 1) * n_ * n_; }

 private:
  std::size_t n_;
  std::size_t d_;
  bool hessians_;
  expr::Program all_;
  expr::Program values_;
};

/// Solves the joint system. Throws BlowUpError on a non-finite state and
/// ConsistencyError when J Jinv leaves the identity (see FlowOptions).
FlowPath solve_flow(const expr::VectorFieldSet& fields, const Eigen::VectorXd& x0, const SampledPath& B,
                    const FlowOptions& options = {});
FlowPath solve_flow(const FieldEvaluator& eval, const Eigen::VectorXd& x0, const SampledPath& B,
                    const FlowOptions& options = {});

/// X alone, by the same scheme (bit-identical to solve_flow(...).X).
SampledPath solve_state(const FieldEvaluator& eval, const Eigen::VectorXd& x0, const SampledPath& B);

/// z_t = J_t z0 + J_t int_0^t Jinv_s sum_a D^2V_a(X_s)[y_s, y_s] dY_a(s),
/// with y_s = J_s y0 and Y = (t, B). The integral uses the trapezoid rule
/// on the flow grid.
SampledPath second_variation_vcf(const FlowPath& flow, const expr::VectorFieldSet& fields,
                                 const Eigen::VectorXd& y0, const Eigen::VectorXd& z0);

struct AprioriReport {
  double holder_B = 0;
  double holder_X = 0;
  double holder_J = 0;
  double bound_X = 0;  // (1 + |x0|)(1 + |B|)^(1/gamma), the constant-free shape
  double bound_J = 0;  // (1 + |x0|) exp(|B|^(1/gamma))
  double ratio_X = 0;  // holder_X / bound_X, an implied constant
  double ratio_J = 0;  // holder_J / bound_J
};

AprioriReport apriori_report(const FlowPath& flow, const Eigen::VectorXd& x0, double gamma);

struct AprioriFit {
  std::size_t paths = 0;
  double max_ratio_X = 0;
  double max_ratio_J = 0;
  double slope = 0;       // least squares of log|J| against |B|^(1/gamma)
  double intercept = 0;
  double envelope = 0;    // max of log(max(|J|, e)) / (1 + |B|)^(1/gamma)
  bool finite = false;
};

AprioriFit apriori_fit(const std::vector<AprioriReport>& reports, double gamma);

}  // namespace fbmhypo
