#include "mbs/bench/bench.hpp"

#include <atomic>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <thread>

#include "mbs/bench/counters.hpp"
#include "mbs/error.hpp"
#include "mbs/runtime/baseline_lock.hpp"
#include "mbs/runtime/cpu.hpp"
#include "mbs/runtime/mbs_mutex.hpp"
#include "mbs/runtime/sync_core.hpp"

namespace mbs::bench {

namespace rt = mbs::runtime;

namespace {

struct FreeDeleter {
  void operator()(std::byte* p) const { std::free(p); }
};

using Buffer = std::unique_ptr<std::byte[], FreeDeleter>;

Buffer aligned_buffer(std::size_t lines, std::size_t line_bytes) {
  std::size_t bytes = std::max<std::size_t>(lines, 1) * line_bytes;
  auto* p = static_cast<std::byte*>(std::aligned_alloc(line_bytes, bytes));
  if (p == nullptr) throw EnvironmentError("buffer allocation failed");
  std::fill(p, p + bytes, std::byte{0});
  return Buffer(p);
}

inline void bump(std::byte* line) {
  auto* word = reinterpret_cast<volatile std::uint64_t*>(line);
  *word = *word + 1;
}

// Counter state of whichever thread executes the critical section; for MBS
// that is the synchronization core's executor.
struct ThreadCounter {
  std::string event;
  std::optional<CounterProvider> provider;
  bool failed = false;
};

thread_local ThreadCounter tl_counter;

std::optional<std::uint64_t> counter_now(const CounterEvent& event, std::atomic<bool>& unavailable) {
  if (unavailable.load(std::memory_order_relaxed)) return std::nullopt;
  if (tl_counter.event != event.name) {
    tl_counter.provider.reset();
    tl_counter.failed = false;
    tl_counter.event = event.name;
  }
  if (!tl_counter.provider && !tl_counter.failed) {
    try {
      tl_counter.provider.emplace(event);
    } catch (const CapabilityError&) {
      tl_counter.failed = true;
    }
  }
  if (!tl_counter.provider) {
    unavailable.store(true, std::memory_order_relaxed);
    return std::nullopt;
  }
  return tl_counter.provider->read();
}

std::uint64_t now_ns() { return static_cast<std::uint64_t>(rt::monotonic_ns()); }

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Mbs: return "mbs";
    case Variant::MbsR: return "mbs-r";
    case Variant::Spinlock: return "spinlock";
    case Variant::Mutex: return "mutex";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (auto v : {Variant::Mbs, Variant::MbsR, Variant::Spinlock, Variant::Mutex})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown variant '" + name + "' (expected mbs, mbs-r, spinlock or mutex)");
}

int default_threads(Variant v) { return v == Variant::MbsR ? 3 : 4; }

std::size_t line_count(std::size_t bytes, std::size_t line_bytes) {
  return (bytes + line_bytes - 1) / line_bytes;
}

long warmup_cycles(long cycles) { return std::max(10L, cycles / 100); }

void validate(const BenchConfig& cfg) {
  std::size_t line = cfg.cache_line_bytes;
  if (line < sizeof(std::uint64_t) || (line & (line - 1)) != 0)
    throw ConfigError("cache line size must be a power of two of at least 8 bytes");
  if (cfg.sigma_bytes < line) throw ConfigError("shared buffer must hold at least one cache line");
  if (cfg.threads < 0) throw ConfigError("thread count must be positive");
  if (cfg.cycles < 1) throw ConfigError("cycle count must be positive");
  if (cfg.sync_core && *cfg.sync_core < 0) throw ConfigError("synchronization core must be >= 0");
  if (cfg.counters_enabled) parse_counter_event(cfg.counter_event);
}

std::vector<LatencySample> BenchResult::all_samples() const {
  std::vector<LatencySample> out;
  for (const auto& t : samples) out.insert(out.end(), t.begin(), t.end());
  return out;
}

BenchResult run_benchmark(const BenchConfig& cfg) {
  validate(cfg);
  const bool mbs = cfg.variant == Variant::Mbs || cfg.variant == Variant::MbsR;
  const int threads = cfg.threads == 0 ? default_threads(cfg.variant) : cfg.threads;
  const std::size_t line = cfg.cache_line_bytes;
  const std::size_t local_lines = line_count(cfg.lambda_bytes, line);
  const std::size_t shared_lines = line_count(cfg.sigma_bytes, line);

  BenchResult result;
  result.variant = cfg.variant;
  result.threads = threads;
  result.warmup = warmup_cycles(cfg.cycles);
  result.shared_writes_per_cycle = shared_lines;

  std::vector<int> cpus;
  rt::SyncCoreHandle core;
  if (mbs) {
    int id = cfg.sync_core ? *cfg.sync_core : rt::default_sync_cores().front();
    result.sync_core = id;
    cpus = rt::application_cpus({id});
    // Workers sharing the executor's CPU would starve a spinning executor.
    auto idle = static_cast<int>(cpus.size()) < threads ? rt::IdleMode::Park : rt::IdleMode::BusyWait;
    core = rt::SyncCore::create(id, rt::AdmissionPolicy::Priority, idle);
  } else {
    cpus = rt::process_cpus().cpus();
  }
  if (static_cast<int>(cpus.size()) < threads) {
    std::string need = "need " + std::to_string(threads) + " application cores, have " +
                       std::to_string(cpus.size());
    if (cfg.strict_cores) {
      if (core) core->shutdown(true);
      throw EnvironmentError(need);
    }
    result.warnings.push_back(need + "; threads share cores");
    if (cpus.empty()) cpus = rt::process_cpus().cpus();
  }
  for (int t = 0; t < threads; ++t) result.thread_cpus.push_back(cpus[t % cpus.size()]);

  Buffer shared = aligned_buffer(shared_lines, line);
  std::optional<rt::MbsMutex> mbs_lock;
  std::optional<rt::BaselineLock> base_lock;
  if (mbs)
    mbs_lock.emplace(core, cfg.variant == Variant::MbsR);
  else
    base_lock.emplace(cfg.variant == Variant::Spinlock ? rt::BaselineKind::Spinlock
                                                       : rt::BaselineKind::Mutex);

  std::optional<CounterEvent> event;
  if (cfg.counters_enabled) event = parse_counter_event(cfg.counter_event);
  std::atomic<bool> counters_unavailable{false};

  result.samples.resize(threads);
  result.touch_log.resize(threads);
  std::mutex warn_mutex;
  std::atomic<int> started{0};

  auto worker = [&](int t) {
    try {
      rt::pin_current_thread(result.thread_cpus[t]);
    } catch (const EnvironmentError& e) {
      std::lock_guard lk(warn_mutex);
      result.warnings.push_back(std::string("thread ") + std::to_string(t) + ": " + e.what());
    }
    Buffer local = aligned_buffer(local_lines, line);
    auto& out = result.samples[t];
    auto& log = result.touch_log[t];
    const long total = result.warmup + cfg.cycles;
    out.reserve(cfg.keep_warmup ? total : cfg.cycles);

    ++started;
    while (started.load() < threads) std::this_thread::yield();

    for (long c = 0; c < total; ++c) {
      const bool logging = cfg.trace_touches && c == 0;
      std::uint64_t t1 = 0;
      std::uint64_t t2 = 0;
      std::optional<std::uint64_t> accesses;
      const std::uint64_t t0 = now_ns();
      for (std::size_t i = 0; i < local_lines; ++i) {
        bump(local.get() + i * line);
        if (logging) log.push_back({false, static_cast<std::uint32_t>(i)});
      }
      auto body = [&] {
        std::optional<std::uint64_t> before;
        if (event) before = counter_now(*event, counters_unavailable);
        t1 = now_ns();
        for (std::size_t i = 0; i < shared_lines; ++i) {
          bump(shared.get() + i * line);
          if (logging) log.push_back({true, static_cast<std::uint32_t>(i)});
        }
        t2 = now_ns();
        if (before) {
          if (auto after = counter_now(*event, counters_unavailable)) accesses = *after - *before;
        }
      };
      if (mbs_lock)
        mbs_lock->critical(0, body);
      else
        base_lock->critical(body);
      const std::uint64_t t3 = now_ns();
      if (c >= result.warmup || cfg.keep_warmup) out.push_back({t3 - t0, t2 - t1, accesses});
    }
  };

  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  for (auto& th : pool) th.join();

  if (core) {
    mbs_lock.reset();
    core->shutdown(true);
  }

  result.counters_available = cfg.counters_enabled && !counters_unavailable.load();
  if (cfg.counters_enabled && !result.counters_available) {
    result.warnings.push_back("hardware counter '" + cfg.counter_event +
                              "' unavailable; latency only");
    for (auto& per_thread : result.samples)
      for (auto& s : per_thread) s.shared_cache_accesses.reset();
  }
  for (std::size_t i = 0; i < shared_lines; ++i)
    result.shared_line_values.push_back(
        *reinterpret_cast<const std::uint64_t*>(shared.get() + i * line));
  return result;
}

void write_samples_csv(std::ostream& out, const BenchResult& result) {
  out << "variant,thread,cycle_index,cycle_ns,cs_ns,shared_cache_accesses\n";
  const std::string name = to_string(result.variant);
  for (std::size_t t = 0; t < result.samples.size(); ++t) {
    const auto& samples = result.samples[t];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      out << name << ',' << t << ',' << i << ',' << s.cycle_ns << ',' << s.cs_ns << ',';
      if (s.shared_cache_accesses) out << *s.shared_cache_accesses;
      out << '\n';
    }
  }
}

}  // namespace mbs::bench
