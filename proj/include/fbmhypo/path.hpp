#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace fbmhypo {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Uniformly gridded time series with values in R^m.
///
/// Row k holds the value at time t0 + k * dt. The time of a row is always
/// computed from its index, never accumulated.
class SampledPath {
 public:
  SampledPath() = default;

  /// A zero path with `points` grid points (N + 1) and `dim` components.
  SampledPath(double t0, double dt, std::size_t points, std::size_t dim);

  /// Takes ownership of `values` (rows = grid points). Throws DomainError when
  /// dt <= 0, fewer than two points, or a value is not finite.
  SampledPath(double t0, double dt, RowMatrix values);

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  double time(std::size_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }
  double t_end() const noexcept { return time(size() - 1); }

  /// Number of grid points (N + 1).
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  /// Number of bins N.
  std::size_t bins() const noexcept { return size() - 1; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  double operator()(std::size_t k, std::size_t c = 0) const { return values_(k, c); }
  double& operator()(std::size_t k, std::size_t c = 0) { return values_(k, c); }

  std::span<const double> row(std::size_t k) const {
    return {values_.data() + k * dim(), dim()};
  }
  std::span<double> row(std::size_t k) { return {values_.data() + k * dim(), dim()}; }

  const RowMatrix& values() const noexcept { return values_; }
  RowMatrix& values() noexcept { return values_; }

  /// Single component as a column vector.
  Eigen::VectorXd component(std::size_t c) const { return values_.col(c); }

  /// Index of the grid point closest to t; throws DomainError if t is off-grid
  /// by more than 1e-9 * dt or outside the window.
  std::size_t index_of(double t) const;

 private:
  double t0_ = 0.0;
  double dt_ = 1.0;
  RowMatrix values_;
};

SampledPath operator+(const SampledPath& a, const SampledPath& b);
SampledPath operator-(const SampledPath& a, const SampledPath& b);
SampledPath operator*(double c, const SampledPath& a);

}  // namespace fbmhypo
