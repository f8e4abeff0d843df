#include "mbs/bench/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mbs/error.hpp"

namespace mbs::bench {

namespace {

int bucket_of(std::uint64_t v) { return v == 0 ? -1 : std::bit_width(v) - 1; }

std::uint64_t bucket_lower(int b) { return b < 0 ? 0 : std::uint64_t{1} << b; }

std::uint64_t bucket_upper(int b) {
  if (b < 0) return 1;
  if (b >= 63) return UINT64_MAX;
  return std::uint64_t{1} << (b + 1);
}

}  // namespace

std::uint64_t nearest_rank(const std::vector<std::uint64_t>& sorted, double percentile) {
  if (sorted.empty()) throw UsageError("percentile of an empty sample");
  auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencyStats compute_stats(std::vector<std::uint64_t> values) {
  if (values.empty()) throw UsageError("statistics of an empty sample");
  std::sort(values.begin(), values.end());
  LatencyStats s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  s.p50 = nearest_rank(values, 50);
  s.p99 = nearest_rank(values, 99);

  long double sum = 0;
  for (auto v : values) sum += v;
  long double mean = sum / values.size();
  long double sq = 0;
  for (auto v : values) sq += (v - mean) * (v - mean);
  s.mean = static_cast<double>(mean);
  s.stddev = static_cast<double>(std::sqrt(sq / values.size()));

  int first = bucket_of(s.min);
  int last = bucket_of(s.max);
  for (int b = first; b <= last; ++b) s.histogram.push_back({bucket_lower(b), bucket_upper(b), 0});
  for (auto v : values) ++s.histogram[bucket_of(v) - first].count;
  return s;
}

LatencyStats compute_stats(const std::vector<LatencySample>& samples, Field field) {
  std::vector<std::uint64_t> values;
  values.reserve(samples.size());
  for (const auto& s : samples) values.push_back(field == Field::Cycle ? s.cycle_ns : s.cs_ns);
  return compute_stats(std::move(values));
}

}  // namespace mbs::bench
