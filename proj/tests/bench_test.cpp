#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "mbs/bench/bench.hpp"
#include "mbs/bench/counters.hpp"
#include "mbs/bench/stats.hpp"
#include "mbs/error.hpp"
#include "mbs/runtime/cpu.hpp"

using namespace mbs;
using namespace mbs::bench;

namespace {

const Variant kVariants[] = {Variant::Mbs, Variant::MbsR, Variant::Spinlock, Variant::Mutex};

BenchConfig small(Variant v, long cycles) {
  BenchConfig cfg;
  cfg.variant = v;
  cfg.cycles = cycles;
  cfg.lambda_bytes = 1024;
  cfg.sigma_bytes = 512;
  return cfg;
}

// Percentile by counting: the smallest value with at least pct% of samples <= it.
std::uint64_t percentile_by_count(const std::vector<std::uint64_t>& v, double pct) {
  std::vector<std::uint64_t> candidates = v;
  std::sort(candidates.begin(), candidates.end());
  for (auto c : candidates) {
    std::size_t at_most = std::count_if(v.begin(), v.end(), [&](auto x) { return x <= c; });
    if (static_cast<double>(at_most) * 100.0 >= pct * static_cast<double>(v.size())) return c;
  }
  return candidates.back();
}

}  // namespace

TEST(Stats, ThreeValues) {
  auto s = compute_stats(std::vector<std::uint64_t>{3, 1, 2});
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.min, 1u);
  EXPECT_EQ(s.p50, 2u);
  EXPECT_EQ(s.p99, 3u);
  EXPECT_EQ(s.max, 3u);
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
}

TEST(Stats, SingletonAndConstant) {
  auto one = compute_stats(std::vector<std::uint64_t>{7});
  EXPECT_EQ(one.min, 7u);
  EXPECT_EQ(one.p50, 7u);
  EXPECT_EQ(one.p99, 7u);
  EXPECT_EQ(one.max, 7u);
  EXPECT_DOUBLE_EQ(one.stddev, 0.0);

  auto flat = compute_stats(std::vector<std::uint64_t>(50, 9));
  EXPECT_EQ(flat.p50, 9u);
  EXPECT_EQ(flat.p99, 9u);
  EXPECT_DOUBLE_EQ(flat.stddev, 0.0);
  ASSERT_EQ(flat.histogram.size(), 1u);
  EXPECT_EQ(flat.histogram[0].count, 50u);
}

TEST(Stats, EmptyRejected) {
  EXPECT_THROW(compute_stats(std::vector<std::uint64_t>{}), UsageError);
}

TEST(Stats, MatchesCountingOracle) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 200; ++round) {
    std::vector<std::uint64_t> v(1 + rng() % 300);
    for (auto& x : v) x = rng() % 5000;
    auto s = compute_stats(v);
    EXPECT_EQ(s.p50, percentile_by_count(v, 50));
    EXPECT_EQ(s.p99, percentile_by_count(v, 99));
    EXPECT_EQ(s.min, *std::min_element(v.begin(), v.end()));
    EXPECT_EQ(s.max, *std::max_element(v.begin(), v.end()));
    std::uint64_t total = 0;
    for (const auto& b : s.histogram) {
      std::size_t in = std::count_if(v.begin(), v.end(),
                                     [&](auto x) { return x >= b.lower && x < b.upper; });
      EXPECT_EQ(b.count, in);
      total += b.count;
    }
    EXPECT_EQ(total, v.size());
  }
}

TEST(Bench, VariantNames) {
  for (auto v : kVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("ticket"), ConfigError);
  EXPECT_EQ(default_threads(Variant::Mbs), 4);
  EXPECT_EQ(default_threads(Variant::MbsR), 3);
}

TEST(Bench, ConfigValidation) {
  auto cfg = small(Variant::Mutex, 5);
  cfg.cycles = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = small(Variant::Mutex, 5);
  cfg.sigma_bytes = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = small(Variant::Mutex, 5);
  cfg.cache_line_bytes = 48;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = small(Variant::Mutex, 5);
  cfg.threads = -1;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = small(Variant::Mutex, 5);
  cfg.counters_enabled = true;
  cfg.counter_event = "instructions-ish";
  EXPECT_THROW(validate(cfg), ConfigError);
  EXPECT_THROW(run_benchmark(cfg), ConfigError);
}

TEST(Bench, Warmup) {
  EXPECT_EQ(warmup_cycles(5), 10);
  EXPECT_EQ(warmup_cycles(1000), 10);
  EXPECT_EQ(warmup_cycles(100000), 1000);
}

TEST(Bench, FiveCyclesEveryVariant) {
  for (auto v : kVariants) {
    auto r = run_benchmark(small(v, 5));
    ASSERT_EQ(static_cast<int>(r.samples.size()), default_threads(v)) << to_string(v);
    for (const auto& per_thread : r.samples) {
      ASSERT_EQ(per_thread.size(), 5u);
      for (const auto& s : per_thread) {
        EXPECT_LE(s.cs_ns, s.cycle_ns);
        EXPECT_FALSE(s.shared_cache_accesses.has_value());
      }
    }
  }
}

TEST(Bench, SharedWritesPerCycle) {
  auto cfg = small(Variant::Mbs, 5);
  cfg.sigma_bytes = 4096;
  auto r = run_benchmark(cfg);
  EXPECT_EQ(r.shared_writes_per_cycle, 4096u / 64u);
  EXPECT_EQ(r.shared_line_values.size(), 64u);
}

TEST(Bench, NoLostSharedWrites) {
  for (auto v : kVariants) {
    auto cfg = small(v, 300);
    auto r = run_benchmark(cfg);
    std::uint64_t expected = static_cast<std::uint64_t>(r.threads) * (r.warmup + cfg.cycles);
    for (auto value : r.shared_line_values) EXPECT_EQ(value, expected) << to_string(v);
  }
}

TEST(Bench, KeepWarmup) {
  auto cfg = small(Variant::Spinlock, 20);
  cfg.keep_warmup = true;
  auto r = run_benchmark(cfg);
  for (const auto& per_thread : r.samples)
    EXPECT_EQ(per_thread.size(), static_cast<std::size_t>(r.warmup + 20));
}

TEST(Bench, SameWorkForEveryVariant) {
  std::vector<std::vector<Touch>> reference;
  for (auto v : kVariants) {
    auto cfg = small(v, 3);
    cfg.threads = 2;
    cfg.trace_touches = true;
    auto r = run_benchmark(cfg);
    ASSERT_EQ(r.touch_log.size(), 2u);
    if (reference.empty()) {
      reference = r.touch_log;
      ASSERT_EQ(reference[0].size(), 1024u / 64 + 512u / 64);
      continue;
    }
    EXPECT_EQ(r.touch_log, reference) << to_string(v);
  }
}

TEST(Bench, CountersDegradeOrReport) {
  auto cfg = small(Variant::Mbs, 5);
  cfg.counters_enabled = true;
  auto r = run_benchmark(cfg);
  bool direct = true;
  try {
    CounterProvider probe(parse_counter_event("cache-references"));
  } catch (const CapabilityError&) {
    direct = false;
  }
  if (!r.counters_available) {
    EXPECT_FALSE(direct);
    EXPECT_FALSE(r.warnings.empty());
    for (const auto& s : r.all_samples()) EXPECT_FALSE(s.shared_cache_accesses.has_value());
  } else {
    for (const auto& s : r.all_samples()) EXPECT_TRUE(s.shared_cache_accesses.has_value());
  }
}

TEST(Bench, CounterEventNames) {
  EXPECT_EQ(parse_counter_event("raw:1a").config, 0x1au);
  EXPECT_NO_THROW(parse_counter_event("llc-load-misses"));
  EXPECT_THROW(parse_counter_event("raw:zz"), ConfigError);
  EXPECT_THROW(parse_counter_event("raw:"), ConfigError);
}

TEST(Bench, StrictCores) {
  auto cfg = small(Variant::Mutex, 5);
  cfg.strict_cores = true;
  cfg.threads = runtime::process_cpus().count() + 1;
  EXPECT_THROW(run_benchmark(cfg), EnvironmentError);
}

TEST(Bench, LargerSharedBufferLongerCriticalSection) {
  auto small_cfg = small(Variant::Mutex, 200);
  small_cfg.threads = 1;
  small_cfg.sigma_bytes = 64;
  auto large_cfg = small_cfg;
  large_cfg.sigma_bytes = 1 << 20;
  auto a = compute_stats(run_benchmark(small_cfg).all_samples(), Field::Cs);
  auto b = compute_stats(run_benchmark(large_cfg).all_samples(), Field::Cs);
  EXPECT_GT(b.p50, a.p50);
}

TEST(Bench, SamplesCsv) {
  auto r = run_benchmark(small(Variant::Spinlock, 5));
  std::ostringstream out;
  write_samples_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "variant,thread,cycle_index,cycle_ns,cs_ns,shared_cache_accesses");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.rfind("spinlock,", 0), 0u);
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
    ++rows;
  }
  EXPECT_EQ(rows, r.threads * 5);
}
