#pragma once

// Discrete Hölder norms and numerical checks of two elementary inequalities
// for them (interpolation against L2, and subdivision of the window).

#include "fbmhypo/path.hpp"

#include <vector>

namespace fbmhypo {

/// sup over grid pairs in [a, b] of |f(t) - f(s)| / |t - s|^gamma, maximised
/// over components. Paths longer than 4097 points in the window are
/// decimated to at most 4097 points first; last_decimation() reports the factor
/// used by the last call on this thread.
double holder_norm(const SampledPath& f, double gamma, double a, double b);
double holder_norm(const SampledPath& f, double gamma);
std::size_t last_decimation();

/// sup |f| over the grid.
double sup_norm(const SampledPath& f);

/// L2 norm on the grid window by the trapezoid rule.
double l2_norm(const SampledPath& f);

struct InequalityReport {
  double lhs = 0;
  double rhs = 0;
  bool ok = false;
};

/// sup|f| <= 2 max(T^(-1/2) |f|_L2, |f|_L2^(2g/(2g+1)) |f|_g^(1/(2g+1))) on [0, T].
InequalityReport check_interpolation(const SampledPath& f, double gamma);

/// |f|_{g,[u_0,u_N]} <= N^(1-g) max_i |f|_{g,[u_i,u_{i+1}]}. The partition
/// points must be sorted grid times.
InequalityReport check_subdivision(const SampledPath& f, double gamma, const std::vector<double>& partition);

}  // namespace fbmhypo
