#pragma once

// Experiment configuration: `key = value` lines plus one field-set block
//
//   experiment = solve
//   H = 0.7
//   begin fields
//   V0 = [-x1]
//   V1 = [1]
//   end fields
//
// `#` starts a comment. Keys are listed in README.md.

#include "fbmhypo/expr.hpp"
#include "fbmhypo/noise.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbmhypo {

enum class ExperimentKind { SampleFbm, Solve, Hormander, MalliavinTail, Gradient, Ergodicity, LemmaSuite };

std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Solve;
  HurstParams hurst = HurstParams::with_defaults(0.7);
  std::string fields_text;
  std::optional<expr::VectorFieldSet> fields;
  int n = 0;
  int d = 0;
  std::vector<double> x0;
  std::vector<double> x0_b;  // second initial condition (ergodicity)
  std::vector<double> xi;    // direction (malliavin-tail, gradient)
  std::vector<double> eps;   // lambda_min thresholds
  std::string psi = "x1";    // functional of X_T (gradient)
  double T = 1.0;
  double dt = 1.0 / 128.0;
  double past_dt = 0;        // 0: same as dt
  double past_window = 8.0;
  std::string past = "sample";  // sample | zero
  int bracket_depth = 2;
  double radius = 10.0;      // dissipativity shell radius
  std::size_t n_mc = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double fd_dx = 1e-2;
  std::size_t lemma_paths = 200;
  std::size_t lemma_pasts = 100;

  /// The text the config was parsed from, echoed into every output file.
  std::string source;
};

/// Throws ParseError with the line (and column) of the offending entry,
/// including violations of the HurstParams constraints.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

}  // namespace fbmhypo
