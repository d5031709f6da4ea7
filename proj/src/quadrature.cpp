#include "fbmhypo/quadrature.hpp"

#include "fbmhypo/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace fbmhypo::quad {

namespace {

Rule compute_jacobi(int n, double a, double b) {
  // Symmetric tridiagonal Jacobi matrix of the monic recurrence.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const double ab = a + b;
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + ab;
    double diag;
    if (k == 0) {
      diag = (b - a) / (ab + 2.0);
    } else {
      diag = (b * b - a * a) / (s * (s + 2.0));
    }
    m(k, k) = diag;
    if (k + 1 < n) {
      const double j = k + 1.0;
      const double s1 = 2.0 * j + ab;
      const double off2 = 4.0 * j * (j + a) * (j + b) * (j + ab) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
      m(k, k + 1) = m(k + 1, k) = std::sqrt(off2);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const double mu0 = std::pow(2.0, ab + 1.0) * std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                                        std::lgamma(ab + 2.0));
  Rule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    r.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    r.weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0;
  }
  return r;
}

}  // namespace

Rule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_jacobi: need n >= 1");
  if (!(a > -1.0) || !(b > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");
  // Rules are reused heavily by the kernel code; cache them.
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, Rule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_tuple(n, a, b);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, compute_jacobi(n, a, b)).first;
  return it->second;
}

Rule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

double integrate_left_power(const std::function<double(double)>& f, double lo, double hi,
                            double beta, int n) {
  if (hi <= lo) return 0.0;
  // u = lo + (hi - lo)(1 + y)/2, (u - lo)^beta = ((hi - lo)/2)^beta (1 + y)^beta.
  const Rule r = gauss_jacobi(n, 0.0, beta);
  const double half = 0.5 * (hi - lo);
  double sum = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) sum += r.weights[k] * f(lo + half * (1.0 + r.nodes[k]));
  return sum * std::pow(half, beta + 1.0);
}

double integrate_right_power(const std::function<double(double)>& f, double lo, double hi,
                             double beta, int n) {
  if (hi <= lo) return 0.0;
  const Rule r = gauss_jacobi(n, beta, 0.0);
  const double half = 0.5 * (hi - lo);
  double sum = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) sum += r.weights[k] * f(lo + half * (1.0 + r.nodes[k]));
  return sum * std::pow(half, beta + 1.0);
}

double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol,
                 double* error) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 15, rel_tol, &err);
  if (error) *error = err;
  return v;
}

double integrate_singular(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  if (hi <= lo) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  return rule.integrate(f, lo, hi, rel_tol);
}

}  // namespace fbmhypo::quad
