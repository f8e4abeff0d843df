#pragma once

#include <cstdint>
#include <vector>

#include "mbs/bench/sample.hpp"

namespace mbs::bench {

struct HistogramBucket {
  std::uint64_t lower = 0;  // inclusive
  std::uint64_t upper = 0;  // exclusive
  std::uint64_t count = 0;
};

struct LatencyStats {
  std::size_t count = 0;
  std::uint64_t min = 0;
  std::uint64_t p50 = 0;
  std::uint64_t p99 = 0;
  std::uint64_t max = 0;
  double mean = 0;
  double stddev = 0;  // population
  std::vector<HistogramBucket> histogram;  // power-of-two buckets spanning [min, max]
};

enum class Field { Cycle, Cs };

/// Nearest-rank percentile of an ascending sequence: element ceil(p/100 * n).
std::uint64_t nearest_rank(const std::vector<std::uint64_t>& sorted, double percentile);

/// Throws UsageError on empty input.
LatencyStats compute_stats(std::vector<std::uint64_t> values);
LatencyStats compute_stats(const std::vector<LatencySample>& samples, Field field);

}  // namespace mbs::bench
