#include "fbmhypo/fraccalc.hpp"

#include "fbmhypo/errors.hpp"

#include <cmath>
#include <vector>

namespace fbmhypo {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("fractional order must lie in (0,1)");
}

void check_origin(const SampledPath& f) {
  if (f.t0() != 0.0) throw DomainError("fractional operators need a grid starting at t = 0");
}

// Weights of the fractional integral for lag p = k - j >= 1 (bin j, target k),
// without the h^a / Gamma(a) factor: node j gets left[p], node j+1 right[p].
void integral_weights(double alpha, std::size_t n, std::vector<double>& left, std::vector<double>& right) {
  left.assign(n + 1, 0.0);
  right.assign(n + 1, 0.0);
  for (std::size_t p = 1; p <= n; ++p) {
    const double pp = static_cast<double>(p);
    const double a = (std::pow(pp, alpha) - std::pow(pp - 1.0, alpha)) / alpha;
    const double b = (std::pow(pp, alpha + 1.0) - std::pow(pp - 1.0, alpha + 1.0)) / (alpha + 1.0);
    left[p] = b - (pp - 1.0) * a;
    right[p] = pp * a - b;
  }
}

}  // namespace

SampledPath frac_integral(const SampledPath& f, double alpha) {
  check_alpha(alpha);
  check_origin(f);
  const std::size_t n = f.bins();
  std::vector<double> left, right;
  integral_weights(alpha, n, left, right);
  const double scale = std::pow(f.dt(), alpha) / std::tgamma(alpha);

  SampledPath out(f.t0(), f.dt(), f.size(), f.dim());
  for (std::size_t c = 0; c < f.dim(); ++c) {
    for (std::size_t k = 1; k <= n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t p = k - j;
        acc += left[p] * f(j, c) + right[p] * f(j + 1, c);
      }
      out(k, c) = scale * acc;
    }
  }
  return out;
}

SampledPath marchaud_derivative(const SampledPath& f, double alpha, bool require_zero_origin) {
  check_alpha(alpha);
  check_origin(f);
  if (require_zero_origin) {
    for (std::size_t c = 0; c < f.dim(); ++c) {
      if (std::abs(f(0, c)) > 1e-12) throw DomainError("marchaud_derivative: f(0) must vanish");
    }
  }
  const std::size_t n = f.bins();
  // For lag p >= 2 the bin integrals of u^(-a-1) and u^(-a) over [p-1, p].
  std::vector<double> ka(n + 1, 0.0), kb(n + 1, 0.0);
  for (std::size_t p = 2; p <= n; ++p) {
    const double pp = static_cast<double>(p);
    ka[p] = (std::pow(pp - 1.0, -alpha) - std::pow(pp, -alpha)) / alpha;
    kb[p] = (std::pow(pp, 1.0 - alpha) - std::pow(pp - 1.0, 1.0 - alpha)) / (1.0 - alpha);
  }
  const double h = f.dt();
  const double hs = std::pow(h, -alpha);
  const double norm = 1.0 / std::tgamma(1.0 - alpha);

  SampledPath out(f.t0(), f.dt(), f.size(), f.dim());
  for (std::size_t c = 0; c < f.dim(); ++c) {
    for (std::size_t k = 1; k <= n; ++k) {
      const double fk = f(k, c);
      // Last bin: f linear, so f(s) - f(r) = (f_k - f_{k-1}) (s - r)/h.
      double acc = (fk - f(k - 1, c)) / (1.0 - alpha);
      for (std::size_t j = 0; j + 1 < k; ++j) {
        const std::size_t p = k - j;
        const double pp = static_cast<double>(p);
        acc += fk * ka[p] - f(j, c) * (kb[p] - (pp - 1.0) * ka[p]) - f(j + 1, c) * (pp * ka[p] - kb[p]);
      }
      const double s = f.time(k);
      out(k, c) = norm * (std::pow(s, -alpha) * fk + alpha * hs * acc);
    }
  }
  return out;
}

SampledPath adjoint_frac_integral(const SampledPath& g, double alpha) {
  check_alpha(alpha);
  const std::size_t n = g.bins();
  std::vector<double> left, right;
  integral_weights(alpha, n, left, right);
  const double scale = std::pow(g.dt(), alpha) / std::tgamma(alpha);

  // Mirror image of the forward integral: lag p = j + 1 - k for bin j >= k,
  // the node nearest to t_k plays the role of the right node.
  SampledPath out(g.t0(), g.dt(), g.size(), g.dim());
  for (std::size_t c = 0; c < g.dim(); ++c) {
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = k; j < n; ++j) {
        const std::size_t p = j + 1 - k;
        acc += right[p] * g(j, c) + left[p] * g(j + 1, c);
      }
      out(k, c) = scale * acc;
    }
  }
  return out;
}

RowMatrix frac_derivative_bin_average(const SampledPath& f, double alpha) {
  check_alpha(alpha);
  const SampledPath i = frac_integral(f, 1.0 - alpha);
  RowMatrix out(static_cast<Eigen::Index>(f.bins()), static_cast<Eigen::Index>(f.dim()));
  for (std::size_t j = 0; j < f.bins(); ++j) {
    for (std::size_t c = 0; c < f.dim(); ++c) {
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = (i(j + 1, c) - i(j, c)) / f.dt();
    }
  }
  return out;
}

}  // namespace fbmhypo
