#pragma once

// Seeded engines and a tiny index-parallel loop. Results are written into
// per-index slots by the callers, so the output never depends on scheduling.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace fbmhypo {

/// Independent engine for replica `stream` of a run seeded with `seed`.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream);

/// Worker count used when a caller passes 0 (initially hardware concurrency).
void set_default_threads(unsigned threads);
unsigned default_threads();

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = default).
/// The first exception thrown by fn is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace fbmhypo
