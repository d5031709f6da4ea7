#pragma once

// Quadrature rules shared by the kernel and covariance code.

#include <functional>
#include <vector>

namespace fbmhypo::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Jacobi rule for the weight (1-y)^a (1+y)^b on [-1,1],
/// a, b > -1 (Golub-Welsch).
Rule gauss_jacobi(int n, double a, double b);

/// n-point Gauss-Legendre rule on [-1,1].
Rule gauss_legendre(int n);

/// int_lo^hi f(u) (u - lo)^beta du with the endpoint power absorbed by a
/// Gauss-Jacobi rule. f must be smooth on [lo, hi].
double integrate_left_power(const std::function<double(double)>& f, double lo, double hi,
                            double beta, int n = 40);

/// int_lo^hi f(u) (hi - u)^beta du, weight at the right endpoint.
double integrate_right_power(const std::function<double(double)>& f, double lo, double hi,
                             double beta, int n = 40);

/// Adaptive Gauss-Kronrod 7-15 on [lo, hi]; infinite limits allowed.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double rel_tol = 1e-12, double* error = nullptr);

/// Double-exponential rule; tolerates integrable endpoint singularities.
double integrate_singular(const std::function<double(double)>& f, double lo, double hi,
                          double rel_tol = 1e-12);

}  // namespace fbmhypo::quad
