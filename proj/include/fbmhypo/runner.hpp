#pragma once

// Batch runner behind the CLI. Every output file starts with `#` lines
// echoing the config; numbers are written with 17 significant digits so a
// re-run with the same config is byte-identical.

#include "fbmhypo/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fbmhypo {

/// Ordered `key = value` pairs, keys namespaced by module.
using Summary = std::vector<std::pair<std::string, std::string>>;

struct RunResult {
  std::vector<std::filesystem::path> files;
  Summary summary;
};

/// Runs the experiment and writes its CSV files and summary.txt into out_dir
/// (created if missing).
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct LemmaSuiteReport {
  std::size_t paths = 0;
  std::size_t pasts = 0;
  std::size_t interpolation_violations = 0;
  std::size_t subdivision_violations = 0;
  std::size_t origin_violations = 0;  // pasts with |f_omega(0)| above 1e-6 |omega|
  double worst_interpolation_ratio = 0;  // max lhs / rhs
  double worst_subdivision_ratio = 0;
  double max_origin_value = 0;
  std::size_t violations() const { return interpolation_violations + subdivision_violations + origin_violations; }
};

/// Interpolation and subdivision inequalities on `paths` fBm paths and
/// f_omega(0) = 0 on `pasts` sampled pasts.
LemmaSuiteReport run_lemma_suite(const HurstParams& p, std::size_t paths, std::size_t pasts, std::uint64_t seed);

std::string format_number(double x);

}  // namespace fbmhypo
