#pragma once

#include <atomic>
#include <cstdint>
#include <thread>

namespace mbs::runtime {

/// FIFO ticket spinlock. Waiters busy-wait on the serving counter.
class TicketSpinlock {
 public:
  void lock() noexcept;
  bool try_lock() noexcept;
  /// Throws UsageError when the calling thread does not hold the lock.
  void unlock();

 private:
  alignas(64) std::atomic<std::uint32_t> next_{0};
  alignas(64) std::atomic<std::uint32_t> serving_{0};
  std::atomic<std::thread::id> owner_{};
};

/// FIFO suspending mutex: ticket order, waiters sleep in the kernel.
class FifoMutex {
 public:
  void lock() noexcept;
  bool try_lock() noexcept;
  void unlock();

 private:
  alignas(64) std::atomic<std::uint32_t> next_{0};
  alignas(64) std::atomic<std::uint32_t> serving_{0};
  std::atomic<std::thread::id> owner_{};
};

enum class BaselineKind { Spinlock, Mutex };

/// Spinlock or mutex baseline behind the same acquire/release contract as
/// MbsMutex.
class BaselineLock {
 public:
  explicit BaselineLock(BaselineKind kind) : kind_(kind) {}

  BaselineKind kind() const noexcept { return kind_; }
  void lock() noexcept;
  bool try_lock() noexcept;
  void unlock();

  template <class F>
  decltype(auto) critical(F&& work) {
    lock();
    struct Unlock {
      BaselineLock& self;
      ~Unlock() { self.unlock(); }
    } guard{*this};
    return work();
  }

 private:
  BaselineKind kind_;
  TicketSpinlock spin_;
  FifoMutex mutex_;
};

inline void baseline_lock(BaselineLock& b) { b.lock(); }
inline void baseline_unlock(BaselineLock& b) { b.unlock(); }

}  // namespace mbs::runtime
