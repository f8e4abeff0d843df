#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mbs/bench/sample.hpp"

namespace mbs::bench {

enum class Variant { Mbs, MbsR, Spinlock, Mutex };

std::string to_string(Variant v);
/// Accepts mbs, mbs-r, spinlock, mutex. Throws ConfigError.
Variant parse_variant(const std::string& name);

/// 4 application threads, 3 for MBS+R (one core stays reserved).
int default_threads(Variant v);

struct BenchConfig {
  Variant variant = Variant::Mbs;
  std::size_t lambda_bytes = 32 * 1024;
  std::size_t sigma_bytes = 8 * 1024;
  int threads = 0;  // 0: default_threads(variant)
  long cycles = 1000;
  std::optional<int> sync_core;  // default: default_sync_cores().front()
  std::size_t cache_line_bytes = 64;
  bool counters_enabled = false;
  std::string counter_event = "cache-references";
  bool keep_warmup = false;
  bool trace_touches = false;  // log one cycle's line order per thread
  bool strict_cores = false;   // fail instead of sharing cores between threads
};

/// Throws ConfigError for inconsistent sizes or counts.
void validate(const BenchConfig& cfg);

std::size_t line_count(std::size_t bytes, std::size_t line_bytes);

/// Warmup cycles run before the measured ones: 1% of cycles, at least 10.
long warmup_cycles(long cycles);

struct Touch {
  bool shared = false;
  std::uint32_t line = 0;

  friend bool operator==(const Touch&, const Touch&) = default;
};

struct BenchResult {
  Variant variant = Variant::Mbs;
  int threads = 0;
  long warmup = 0;
  std::optional<int> sync_core;
  std::vector<int> thread_cpus;
  std::vector<std::vector<LatencySample>> samples;  // per thread
  std::vector<std::uint64_t> shared_line_values;     // final write count per shared line
  std::uint64_t shared_writes_per_cycle = 0;
  bool counters_available = false;
  std::vector<std::string> warnings;
  std::vector<std::vector<Touch>> touch_log;  // per thread, first cycle only

  std::vector<LatencySample> all_samples() const;
};

/// Runs threads x (warmup + cycles) benchmark cycles. Each cycle writes one
/// word per line of the thread's private buffer, then, inside one critical
/// section, one word per line of the shared buffer. Counter unavailability
/// degrades to latency-only with a warning.
BenchResult run_benchmark(const BenchConfig& cfg);

/// variant,thread,cycle_index,cycle_ns,cs_ns,shared_cache_accesses
void write_samples_csv(std::ostream& out, const BenchResult& result);

}  // namespace mbs::bench
