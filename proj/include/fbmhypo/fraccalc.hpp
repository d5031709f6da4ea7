#pragma once

// Fractional integral, Marchaud derivative and the L2-adjoint of the
// fractional integral on uniform grids starting at 0.
//
// All three use product integration: the data is interpolated linearly on
// each bin and the power kernel is integrated exactly against it, so the
// kernel singularity is never sampled.

#include "fbmhypo/path.hpp"

namespace fbmhypo {

/// I^a f(t) = (1/Gamma(a)) int_0^t (t-s)^(a-1) f(s) ds, a in (0,1).
SampledPath frac_integral(const SampledPath& f, double alpha);

/// D^a f(s) = (s^-a f(s) + a int_0^s (f(s)-f(r)) (s-r)^(-a-1) dr) / Gamma(1-a).
///
/// With require_zero_origin the path must vanish at 0 (to 1e-12); the value
/// at s = 0 is reported as 0. Without it the formula is evaluated as written,
/// which is the derivative of f extended by 0 to negative times, and the
/// (singular) value at 0 is still reported as 0.
SampledPath marchaud_derivative(const SampledPath& f, double alpha, bool require_zero_origin = true);

/// (I^a)* g(t) = (1/Gamma(a)) int_t^T (s-t)^(a-1) g(s) ds with T the last
/// grid time.
SampledPath adjoint_frac_integral(const SampledPath& g, double alpha);

/// Bin averages of D^a f: row j is (1/dt) int_{t_j}^{t_{j+1}} D^a f(s) ds,
/// computed as the increment of I^(1-a) f. Valid without f(0) = 0 and free
/// of the s^-a spike at the origin. Returns bins() x dim().
RowMatrix frac_derivative_bin_average(const SampledPath& f, double alpha);

}  // namespace fbmhypo
