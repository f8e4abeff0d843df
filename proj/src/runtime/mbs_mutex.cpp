#include "mbs/runtime/mbs_mutex.hpp"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <map>
#include <vector>

namespace mbs::runtime {

namespace detail {

namespace {
thread_local std::vector<HeldEntry> tls_held;
}  // namespace

void push_held(const SyncCore* core, const MbsMutex* mutex) { tls_held.push_back({core, mutex}); }

void pop_held(const MbsMutex* mutex) noexcept {
  if (!tls_held.empty() && tls_held.back().mutex == mutex) tls_held.pop_back();
}

bool holds(const MbsMutex* mutex) noexcept {
  return std::any_of(tls_held.begin(), tls_held.end(),
                     [mutex](const HeldEntry& e) { return e.mutex == mutex; });
}

std::size_t held_depth() noexcept { return tls_held.size(); }

static const HeldEntry* innermost() noexcept {
  return tls_held.empty() ? nullptr : &tls_held.back();
}

void await_flag(std::atomic<std::uint32_t>& flag, bool spin) noexcept {
  if (spin) {
    Backoff backoff;
    while (flag.load(std::memory_order_acquire) == 0) backoff.pause();
    return;
  }
  while (flag.load(std::memory_order_acquire) == 0) flag.wait(0, std::memory_order_acquire);
}

void raise_flag(std::atomic<std::uint32_t>& flag) noexcept {
  flag.store(1, std::memory_order_release);
  flag.notify_all();
}

// Admission of a lock() caller. The executor hands the core over and then
// sleeps until the holder unlocks, so the migrated thread has the CPU.
class GrantRequest final : public Request {
 public:
  explicit GrantRequest(MbsMutex& mutex) : mutex_(mutex) {}

  void execute() noexcept override {
    auto& released = mutex_.core_->grant_released();
    released.store(0, std::memory_order_relaxed);
    raise_flag(granted_);  // `this` may be gone after this line
    await_flag(released, false);
  }

  void await_grant(bool spin) { await_flag(granted_, spin); }

 private:
  MbsMutex& mutex_;
  std::atomic<std::uint32_t> granted_{0};
};

namespace {

// One lazily created thread per CPU that occupies the CPU while an MBS+R
// holder that came from it is away.
class ReservationContext {
 public:
  explicit ReservationContext(int cpu) : cpu_(cpu), thread_([this] { run(); }) {}

  ~ReservationContext() {
    stop_.store(true, std::memory_order_release);
    armed_.fetch_add(1, std::memory_order_acq_rel);
    armed_.notify_all();
    thread_.join();
  }

  void arm() {
    armed_.fetch_add(1, std::memory_order_acq_rel);
    armed_.notify_all();
  }

  void disarm() { armed_.fetch_sub(1, std::memory_order_acq_rel); }

 private:
  void run() {
    try {
      pin_current_thread(cpu_);
    } catch (...) {
      return;
    }
    // Highest application priority when the process may use SCHED_FIFO;
    // ordinary time sharing otherwise.
    sched_param param{};
    param.sched_priority = sched_get_priority_min(SCHED_FIFO);
    (void)pthread_setschedparam(pthread_self(), SCHED_FIFO, &param);
    for (;;) {
      std::uint32_t armed = armed_.load(std::memory_order_acquire);
      if (stop_.load(std::memory_order_acquire)) return;
      if (armed == 0) {
        armed_.wait(0, std::memory_order_acquire);
        continue;
      }
      cpu_relax();
    }
  }

  const int cpu_;
  std::atomic<std::uint32_t> armed_{0};
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

class ReservationPool {
 public:
  static ReservationPool& instance() {
    static ReservationPool pool;
    return pool;
  }

  void arm(int cpu) { context(cpu).arm(); }
  void disarm(int cpu) { context(cpu).disarm(); }

 private:
  ReservationContext& context(int cpu) {
    std::lock_guard lk(mutex_);
    auto& slot = contexts_[cpu];
    if (!slot) slot = std::make_unique<ReservationContext>(cpu);
    return *slot;
  }

  std::mutex mutex_;
  std::map<int, std::unique_ptr<ReservationContext>> contexts_;
};

}  // namespace

}  // namespace detail

MbsMutex::MbsMutex(SyncCoreHandle core, bool reservation, Migration critical_mode)
    : core_(std::move(core)), reservation_(reservation), mode_(critical_mode) {
  if (!core_) throw UsageError("mbs mutex needs a synchronization core");
  if (core_->state() != CoreState::Running)
    throw UsageError("synchronization core " + std::to_string(core_->core_id()) + " is shut down");
}

MbsMutex::~MbsMutex() = default;

std::optional<std::thread::id> MbsMutex::holder() const noexcept {
  std::thread::id id = holder_.load(std::memory_order_acquire);
  if (id == std::thread::id{}) return std::nullopt;
  return id;
}

void MbsMutex::enter(std::thread::id requester) noexcept {
  holder_.store(requester, std::memory_order_release);
}

void MbsMutex::leave() noexcept { holder_.store(std::thread::id{}, std::memory_order_release); }

void MbsMutex::poison(std::exception_ptr cause) noexcept {
  std::lock_guard lk(poison_mutex_);
  if (!poison_cause_) poison_cause_ = std::move(cause);
  poisoned_.store(true, std::memory_order_release);
}

void MbsMutex::throw_poisoned() const {
  std::exception_ptr cause;
  {
    std::lock_guard lk(poison_mutex_);
    cause = poison_cause_;
  }
  std::string what = "mbs mutex poisoned by a failed critical section";
  if (cause) {
    try {
      std::rethrow_exception(cause);
    } catch (const std::exception& e) {
      what += ": ";
      what += e.what();
    } catch (...) {
    }
  }
  throw PoisonedError(what, cause);
}

void MbsMutex::check_acquire() const {
  if (detail::holds(this))
    throw UsageError("mbs mutex is not reentrant: calling thread already holds it");
  if (poisoned()) throw_poisoned();
  if (core_->state() != CoreState::Running)
    throw UsageError("synchronization core " + std::to_string(core_->core_id()) + " is shut down");
  if (const auto* outer = detail::innermost()) {
    if (outer->core == core_.get() ||
        SyncCore::nesting_rank(outer->core->core_id()) >= SyncCore::nesting_rank(core_->core_id()))
      throw UsageError("nested mbs lock violates the synchronization core order (core " +
                       std::to_string(outer->core->core_id()) + " then core " +
                       std::to_string(core_->core_id()) + ")");
  }
}

void MbsMutex::lock(int priority) {
  check_acquire();
  const int origin = current_cpu();
  const CpuSet saved = thread_affinity();

  detail::GrantRequest grant(*this);
  grant.priority = priority;
  grant.requester = std::this_thread::get_id();
  core_->enqueue(grant);
  // MBS+R keeps the origin core busy while queued; MBS sleeps and frees it.
  grant.await_grant(reservation_);

  // Admitted: the executor sleeps until unlock() raises grant_released().
  try {
    set_thread_affinity(CpuSet::single(core_->core_id()));
  } catch (...) {
    hand_back();
    throw;
  }
  if (poisoned()) {
    set_thread_affinity(saved);
    hand_back();
    throw_poisoned();
  }

  const auto sync_cores = SyncCore::claimed_cores();
  const bool origin_is_sync = std::find(sync_cores.begin(), sync_cores.end(), origin) != sync_cores.end();
  CpuSet back = saved;
  for (int c : sync_cores) back.remove(c);
  return_mask_ = back.empty() ? saved : back;
  saved_mask_ = saved;
  origin_cpu_ = origin;
  reserved_cpu_ = -1;
  if (reservation_ && !origin_is_sync) {
    detail::ReservationPool::instance().arm(origin);
    reserved_cpu_ = origin;
  }
  holder_.store(std::this_thread::get_id(), std::memory_order_release);
  detail::push_held(core_.get(), this);
}

void MbsMutex::unlock() {
  if (holder_.load(std::memory_order_acquire) != std::this_thread::get_id())
    throw UsageError("unlock of an mbs mutex by a thread that does not hold it");
  const auto* inner = detail::innermost();
  if (inner == nullptr || inner->mutex != this)
    throw UsageError("mbs mutexes must be released in reverse acquisition order");

  detail::pop_held(this);
  holder_.store(std::thread::id{}, std::memory_order_release);
  const int reserved = reserved_cpu_;
  const int origin = origin_cpu_;
  const CpuSet back = return_mask_;
  const CpuSet saved = saved_mask_;
  reserved_cpu_ = -1;
  try {
    if (reserved >= 0) detail::ReservationPool::instance().disarm(reserved);
    // Land on the origin CPU first, then widen the mask again.
    if (back.contains(origin)) {
      set_thread_affinity(CpuSet::single(origin));
      set_thread_affinity(back);
    } else if (reservation_) {
      set_thread_affinity(CpuSet::single(origin));
      set_thread_affinity(saved);
    } else {
      set_thread_affinity(back);
    }
  } catch (...) {
    hand_back();
    throw;
  }
  hand_back();
}

void MbsMutex::hand_back() noexcept {
  core_->release_hold();
  detail::raise_flag(core_->grant_released());
}

MbsLockGuard::~MbsLockGuard() {
  if (std::uncaught_exceptions() > uncaught_)
    mutex_.poison(std::make_exception_ptr(
        std::runtime_error("exception escaped an mbs critical section")));
  try {
    mutex_.unlock();
  } catch (...) {
  }
}

}  // namespace mbs::runtime
