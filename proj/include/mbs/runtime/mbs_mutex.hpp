#pragma once

#include <atomic>
#include <exception>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>

#include "mbs/error.hpp"
#include "mbs/runtime/cpu.hpp"
#include "mbs/runtime/sync_core.hpp"

namespace mbs::runtime {

/// How critical() moves the control flow to the synchronization core.
/// lock()/unlock() always re-bind the calling thread.
enum class Migration {
  Delegation,  // ship the closure to the executor and wait for the result
  Affinity,    // lock(); work(); unlock() on the calling thread
};

class MbsMutex;

namespace detail {

// Critical sections the calling thread is inside of, innermost last.
struct HeldEntry {
  const SyncCore* core = nullptr;
  const MbsMutex* mutex = nullptr;
};

void push_held(const SyncCore* core, const MbsMutex* mutex);
void pop_held(const MbsMutex* mutex) noexcept;
bool holds(const MbsMutex* mutex) noexcept;
std::size_t held_depth() noexcept;

// Waits until `flag` becomes non-zero, either spinning on the current CPU
// (keeps it occupied) or sleeping in the kernel (releases it).
void await_flag(std::atomic<std::uint32_t>& flag, bool spin) noexcept;
void raise_flag(std::atomic<std::uint32_t>& flag) noexcept;

class GrantRequest;

}  // namespace detail

/// A mutex whose critical sections run on one synchronization core.
///
/// With `reservation` (MBS+R) the origin core of a waiting or migrated
/// thread stays occupied until the critical section ends and the thread
/// resumes there. Without it the origin core is released for other threads.
///
/// Not reentrant. A failure inside a critical section poisons the mutex:
/// that call and every later acquisition throw PoisonedError.
class MbsMutex {
 public:
  MbsMutex(SyncCoreHandle core, bool reservation, Migration critical_mode = Migration::Delegation);
  ~MbsMutex();

  MbsMutex(const MbsMutex&) = delete;
  MbsMutex& operator=(const MbsMutex&) = delete;

  /// Migrates the calling thread onto the synchronization core once admitted.
  void lock(int priority = 0);
  /// Migrates back: to exactly the origin CPU with reservation, otherwise to
  /// the thread's previous affinity without synchronization cores.
  void unlock();

  /// Runs `work` once on the synchronization core and returns its result.
  template <class F>
  std::invoke_result_t<F&> critical(int priority, F&& work);

  /// Queues `work` for the synchronization core without waiting.
  template <class F>
  std::future<std::invoke_result_t<F&>> submit(int priority, F work);

  const SyncCoreHandle& sync_core() const noexcept { return core_; }
  bool reservation() const noexcept { return reservation_; }
  Migration critical_mode() const noexcept { return mode_; }
  std::optional<std::thread::id> holder() const noexcept;
  bool poisoned() const noexcept { return poisoned_.load(std::memory_order_acquire); }

  // Used by queued requests on the executor.
  void enter(std::thread::id requester) noexcept;
  void leave() noexcept;
  void poison(std::exception_ptr cause) noexcept;
  [[noreturn]] void throw_poisoned() const;

 private:
  void hand_back() noexcept;
  void check_acquire() const;

  SyncCoreHandle core_;
  const bool reservation_;
  const Migration mode_;
  std::atomic<std::thread::id> holder_{};
  std::atomic<bool> poisoned_{false};
  mutable std::mutex poison_mutex_;
  std::exception_ptr poison_cause_;

  friend class detail::GrantRequest;

  // State of the current lock() holder; one holder at a time.
  int origin_cpu_ = -1;
  int reserved_cpu_ = -1;
  CpuSet return_mask_;
  CpuSet saved_mask_;
};

/// Scoped lock(); a guard destroyed by an exception poisons the mutex.
class MbsLockGuard {
 public:
  MbsLockGuard(MbsMutex& mutex, int priority = 0)
      : mutex_(mutex), uncaught_(std::uncaught_exceptions()) {
    mutex_.lock(priority);
  }
  ~MbsLockGuard();
  MbsLockGuard(const MbsLockGuard&) = delete;
  MbsLockGuard& operator=(const MbsLockGuard&) = delete;

 private:
  MbsMutex& mutex_;
  int uncaught_;
};

namespace detail {

template <class R>
struct ResultSlot {
  std::optional<R> value;
  template <class F>
  void run(F& f) { value.emplace(f()); }
  R take() { return std::move(*value); }
};

template <>
struct ResultSlot<void> {
  template <class F>
  void run(F& f) { f(); }
  void take() {}
};

template <class F, class R>
class DelegatedCall final : public Request {
 public:
  DelegatedCall(MbsMutex& mutex, F& work) : mutex_(mutex), work_(work) {}

  void execute() noexcept override {
    if (mutex_.poisoned()) {
      failed_ = true;
    } else {
      mutex_.enter(requester);
      push_held(mutex_.sync_core().get(), &mutex_);
      try {
        slot_.run(work_);
      } catch (...) {
        failed_ = true;
        mutex_.poison(std::current_exception());
      }
      pop_held(&mutex_);
      mutex_.leave();
    }
    mutex_.sync_core()->release_hold();
    raise_flag(done_);
  }

  R wait_and_take(bool spin) {
    await_flag(done_, spin);
    if (failed_) mutex_.throw_poisoned();
    return slot_.take();
  }

 private:
  MbsMutex& mutex_;
  F& work_;
  ResultSlot<R> slot_;
  bool failed_ = false;
  std::atomic<std::uint32_t> done_{0};
};

template <class F, class R>
class AsyncCall final : public Request {
 public:
  AsyncCall(MbsMutex& mutex, F work) : mutex_(mutex), work_(std::move(work)) {}

  std::future<R> future() { return promise_.get_future(); }

  std::exception_ptr poisoned_error() const {
    try {
      mutex_.throw_poisoned();
    } catch (...) {
      return std::current_exception();
    }
  }

  void execute() noexcept override {
    std::unique_ptr<AsyncCall> self(this);
    std::exception_ptr failure;
    ResultSlot<R> slot;
    if (mutex_.poisoned()) {
      failure = poisoned_error();
    } else {
      mutex_.enter(requester);
      push_held(mutex_.sync_core().get(), &mutex_);
      try {
        slot.run(work_);
      } catch (...) {
        mutex_.poison(std::current_exception());
        failure = poisoned_error();
      }
      pop_held(&mutex_);
      mutex_.leave();
    }
    // The mutex may be destroyed once the future is ready.
    mutex_.sync_core()->release_hold();
    if (failure) {
      promise_.set_exception(failure);
    } else if constexpr (std::is_void_v<R>) {
      promise_.set_value();
    } else {
      promise_.set_value(slot.take());
    }
  }

 private:
  MbsMutex& mutex_;
  F work_;
  std::promise<R> promise_;
};

}  // namespace detail

template <class F>
std::invoke_result_t<F&> MbsMutex::critical(int priority, F&& work) {
  using R = std::invoke_result_t<F&>;
  if (mode_ == Migration::Affinity) {
    lock(priority);
    try {
      if constexpr (std::is_void_v<R>) {
        work();
        unlock();
        return;
      } else {
        R result = work();
        unlock();
        return result;
      }
    } catch (...) {
      poison(std::current_exception());
      unlock();
      throw_poisoned();
    }
  }
  check_acquire();
  detail::DelegatedCall<std::remove_reference_t<F>, R> call(*this, work);
  call.priority = priority;
  call.requester = std::this_thread::get_id();
  core_->enqueue(call);
  return call.wait_and_take(reservation_);
}

template <class F>
std::future<std::invoke_result_t<F&>> MbsMutex::submit(int priority, F work) {
  using R = std::invoke_result_t<F&>;
  check_acquire();
  auto call = std::make_unique<detail::AsyncCall<F, R>>(*this, std::move(work));
  call->priority = priority;
  call->requester = std::this_thread::get_id();
  auto future = call->future();
  core_->enqueue(*call);
  call.release();  // owned by the executor from here on
  return future;
}

}  // namespace mbs::runtime
