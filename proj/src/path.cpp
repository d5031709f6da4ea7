#include "fbmhypo/path.hpp"

#include "fbmhypo/errors.hpp"

#include <cmath>

namespace fbmhypo {

namespace {

void check_grid(double dt, std::size_t points) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("SampledPath: dt must be positive");
  if (points < 2) throw DomainError("SampledPath: need at least two grid points");
}

void check_compatible(const SampledPath& a, const SampledPath& b) {
  if (a.size() != b.size() || a.dim() != b.dim() || a.t0() != b.t0() || a.dt() != b.dt()) {
    throw DomainError("SampledPath: grid mismatch");
  }
}

}  // namespace

SampledPath::SampledPath(double t0, double dt, std::size_t points, std::size_t dim)
    : t0_(t0), dt_(dt), values_(RowMatrix::Zero(static_cast<Eigen::Index>(points),
                                                static_cast<Eigen::Index>(dim))) {
  check_grid(dt, points);
}

SampledPath::SampledPath(double t0, double dt, RowMatrix values)
    : t0_(t0), dt_(dt), values_(std::move(values)) {
  check_grid(dt, size());
  if (!values_.allFinite()) throw DomainError("SampledPath: non-finite value");
}

std::size_t SampledPath::index_of(double t) const {
  const double pos = (t - t0_) / dt_;
  const double k = std::round(pos);
  if (std::abs(pos - k) > 1e-9 || k < 0.0 || k > static_cast<double>(bins())) {
    throw DomainError("SampledPath: time " + std::to_string(t) + " is not a grid point");
  }
  return static_cast<std::size_t>(k);
}

SampledPath operator+(const SampledPath& a, const SampledPath& b) {
  check_compatible(a, b);
  return SampledPath(a.t0(), a.dt(), a.values() + b.values());
}

SampledPath operator-(const SampledPath& a, const SampledPath& b) {
  check_compatible(a, b);
  return SampledPath(a.t0(), a.dt(), a.values() - b.values());
}

SampledPath operator*(double c, const SampledPath& a) {
  return SampledPath(a.t0(), a.dt(), c * a.values());
}

}  // namespace fbmhypo
