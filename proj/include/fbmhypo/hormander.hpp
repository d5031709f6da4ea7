#pragma once

// Iterated Lie brackets of a field set, the pointwise bracket rank check,
// and a sampling certificate for the dissipativity condition
// <x, V0(x)> <= M1 - M2 |x|^2.

#include "fbmhypo/expr.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fbmhypo {

struct BracketEntry {
  std::vector<int> index;  // (i_1, ..., i_k), last entry >= 1
  expr::FieldVector field; // [V_{i_1}, [V_{i_2}, ... V_{i_k}]]
};

struct BracketFamily {
  int level = 0;
  std::vector<BracketEntry> entries;  // all levels 1..level, level by level
};

/// Every V_I with I in {0..d}^(k-1) x {1..d}, k <= N.
BracketFamily bracket_family(const expr::VectorFieldSet& fields, int N);

std::string index_to_string(const std::vector<int>& index);

struct RankReport {
  int rank = 0;
  double sigma_min = 0;  // best n-column subselection
  bool satisfied = false;
  std::vector<double> singular_values;
  std::vector<std::size_t> best_columns;
  bool exhaustive = true;  // false when the subset search fell back to greedy
};

/// Numerical rank (threshold 1e-10 sigma_max) of the family evaluated at x0.
RankReport hormander_rank(const expr::VectorFieldSet& fields, int N, const Eigen::VectorXd& x0);
RankReport rank_of_columns(const Eigen::MatrixXd& columns);

struct DissipativityReport {
  double M1 = 0;
  double M2 = 0;
  double rho = 0;  // inf of -<x,V0>/|x|^2 over the outer shell R/2 <= |x| <= R
  bool satisfied = false;
  std::optional<Eigen::VectorXd> counterexample;
  std::size_t samples = 0;
  std::string method = "sampling certificate (not a proof)";
};

/// Samples spheres of radii R/L, 2R/L, ..., R plus a coarse grid on
/// [-R, R]^n. Satisfied when rho > 0; then M2 = min(1, rho) and M1 is the
/// least non-negative constant with <x,V0> <= M1 - M2|x|^2 on all samples.
/// Otherwise the counterexample maximises <x,V0>/|x|^2.
DissipativityReport dissipativity_check(const expr::FieldVector& V0, double R, std::size_t n_samples,
                                        std::uint64_t seed = 1);

}  // namespace fbmhypo
