#pragma once

#include <atomic>
#include <cstdint>
#include <future>
#include <memory>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace mbs::runtime {

enum class AdmissionPolicy { Priority, Fifo };
enum class IdleMode { BusyWait, Park };
enum class CoreState { Running, Draining, ShutDown };

/// One admitted request, as seen by the executor.
struct ServiceRecord {
  std::uint64_t seqno = 0;
  int priority = 0;
  std::thread::id requester;
  std::int64_t enqueue_ns = 0;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  int cpu = -1;
};

/// Monotonic timestamp in nanoseconds (CLOCK_MONOTONIC_RAW).
std::int64_t monotonic_ns() noexcept;

namespace detail {

// A pending critical-section request. The executor calls execute() exactly
// once; after execute() signals the requester the object may be gone.
class Request {
 public:
  virtual ~Request() = default;
  virtual void execute() noexcept = 0;

  int priority = 0;
  std::uint64_t seqno = 0;
  std::thread::id requester;
  std::int64_t enqueue_ns = 0;
};

}  // namespace detail

/// A dedicated executor bound to one CPU. It admits critical-section
/// requests one at a time, by priority (FIFO among equals) or by arrival,
/// and runs each to completion before looking at the queue again.
class SyncCore {
 public:
  struct Options {
    AdmissionPolicy policy = AdmissionPolicy::Priority;
    IdleMode idle = IdleMode::BusyWait;
    bool record_service = false;
  };

  /// Claims `core_id` for this process and starts the executor pinned to it.
  /// Throws ConfigError for a core id the machine does not have, UsageError
  /// if the core is already claimed, EnvironmentError if pinning fails.
  static std::shared_ptr<SyncCore> create(int core_id, Options options);
  static std::shared_ptr<SyncCore> create(int core_id, AdmissionPolicy policy,
                                          IdleMode idle = IdleMode::BusyWait);

  SyncCore(const SyncCore&) = delete;
  SyncCore& operator=(const SyncCore&) = delete;
  ~SyncCore();

  int core_id() const noexcept { return core_id_; }
  AdmissionPolicy policy() const noexcept { return options_.policy; }
  IdleMode idle_mode() const noexcept { return options_.idle; }
  CoreState state() const noexcept { return state_.load(std::memory_order_acquire); }

  /// Requests queued and not yet admitted.
  std::size_t pending() const noexcept { return pending_.load(std::memory_order_acquire); }
  std::uint64_t served() const noexcept { return served_.load(std::memory_order_acquire); }
  /// True while a critical section is admitted and not finished.
  bool busy() const noexcept { return active_.load(std::memory_order_acquire); }

  /// Stops the executor. Without `drain`, fails with UsageError unless the
  /// core is idle with an empty queue; with `drain`, queued work is served
  /// first. Lock attempts afterwards fail with UsageError.
  void shutdown(bool drain = false);

  /// Admission log; only filled when Options::record_service is set.
  std::vector<ServiceRecord> service_log() const;

  /// True when called from this core's executor thread.
  bool on_executor() const noexcept;

  /// Called by the admitted request when its critical section is over,
  /// before the requester is signalled.
  void release_hold() noexcept { active_.store(false, std::memory_order_release); }

  /// Raised by a lock() holder on unlock; the executor sleeps on it while
  /// the migrated thread owns the core.
  std::atomic<std::uint32_t>& grant_released() noexcept { return grant_released_; }

  /// Queues a request; throws UsageError unless the core is Running.
  void enqueue(detail::Request& request);

  /// Total order used to validate nesting: a thread holding a mutex on core
  /// A may only acquire one on core B when rank(A) < rank(B). Cores not in
  /// the list rank after listed ones, by id. Default: ascending core id.
  static void set_nesting_order(std::vector<int> cores);
  static long nesting_rank(int core_id);

  /// Ids of every core currently claimed in this process.
  static std::vector<int> claimed_cores();

 private:
  SyncCore(int core_id, Options options);
  void run(std::promise<void>& ready);
  detail::Request* pop();
  void idle_wait();
  void serve(detail::Request& request);
  void release_claim() noexcept;

  struct Later {
    AdmissionPolicy policy;
    bool operator()(const detail::Request* a, const detail::Request* b) const {
      if (policy == AdmissionPolicy::Priority && a->priority != b->priority)
        return a->priority < b->priority;
      return a->seqno > b->seqno;
    }
  };

  const int core_id_;
  const Options options_;
  std::atomic<CoreState> state_{CoreState::Running};

  mutable std::mutex queue_mutex_;
  std::priority_queue<detail::Request*, std::vector<detail::Request*>, Later> queue_;
  std::uint64_t next_seqno_ = 1;
  std::atomic<std::size_t> pending_{0};
  std::atomic<bool> active_{false};
  std::atomic<bool> stop_{false};
  std::atomic<std::uint32_t> wake_{0};
  std::atomic<std::uint64_t> served_{0};
  std::atomic<std::uint32_t> grant_released_{0};


  mutable std::mutex log_mutex_;
  std::vector<ServiceRecord> log_;

  std::thread executor_;
  std::thread::id executor_id_;
  bool claim_held_ = true;  // guarded by the registry mutex
  std::mutex join_mutex_;
};

using SyncCoreHandle = std::shared_ptr<SyncCore>;

inline SyncCoreHandle new_sync_core(int core_id, AdmissionPolicy policy,
                                    IdleMode idle = IdleMode::BusyWait) {
  return SyncCore::create(core_id, policy, idle);
}

}  // namespace mbs::runtime
