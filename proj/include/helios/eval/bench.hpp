#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <vector>

#include "helios/error.hpp"

namespace helios::eval {

inline constexpr int kBenchWarmup = 10;

struct LatencyStats {
  int iterations = 0;  // timed iterations, warm-up excluded
  double mean_ms = 0;
  double p50_ms = 0;
  double p99_ms = 0;
};

/// Nearest-rank percentile of an ascending sample.
inline double percentile(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), ErrorCode::kEmptyInput, "no samples");
  const auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

inline LatencyStats summarize_latencies(std::vector<double> ms) {
  require(!ms.empty(), ErrorCode::kEmptyInput, "no timed iterations");
  std::sort(ms.begin(), ms.end());
  LatencyStats s;
  s.iterations = static_cast<int>(ms.size());
  for (double v : ms) s.mean_ms += v;
  s.mean_ms /= static_cast<double>(ms.size());
  s.p50_ms = percentile(ms, 50);
  s.p99_ms = percentile(ms, 99);
  return s;
}

/// Calls `run(i)` `iterations` times on the calling thread and reports wall-clock statistics
/// of all but the first kBenchWarmup calls.
inline LatencyStats bench_latency(const std::function<void(int)>& run, int iterations) {
  require(iterations >= 100, ErrorCode::kInvalidArgument, "benchmarks need at least 100 iterations");
  std::vector<double> ms;
  ms.reserve(iterations - kBenchWarmup);
  for (int i = 0; i < iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run(i);
    const auto t1 = std::chrono::steady_clock::now();
    if (i >= kBenchWarmup) ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return summarize_latencies(std::move(ms));
}

}  // namespace helios::eval
