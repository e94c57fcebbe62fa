#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace wflow {

// Per-path random stream. The engine is seeded from (seed, path index) only,
// so a path sees the same numbers whatever thread runs it.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path);

  // Uniform on (0, 1): never returns 0 or 1.
  double uniform();
  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

// 0 -> WFLOW_THREADS, then hardware concurrency.
unsigned resolve_threads(unsigned requested);

// Calls body(i) for i in [0, n) from `threads` workers; each index is handled
// exactly once. The body must only write to per-index slots.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace wflow
