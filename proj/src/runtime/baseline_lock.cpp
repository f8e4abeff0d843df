#include "mbs/runtime/baseline_lock.hpp"

#include "mbs/error.hpp"
#include "mbs/runtime/cpu.hpp"

namespace mbs::runtime {

void TicketSpinlock::lock() noexcept {
  const std::uint32_t ticket = next_.fetch_add(1, std::memory_order_relaxed);
  Backoff backoff;
  while (serving_.load(std::memory_order_acquire) != ticket) backoff.pause();
  owner_.store(std::this_thread::get_id(), std::memory_order_relaxed);
}

bool TicketSpinlock::try_lock() noexcept {
  std::uint32_t serving = serving_.load(std::memory_order_acquire);
  std::uint32_t expected = serving;
  if (!next_.compare_exchange_strong(expected, serving + 1, std::memory_order_acquire))
    return false;
  owner_.store(std::this_thread::get_id(), std::memory_order_relaxed);
  return true;
}

void TicketSpinlock::unlock() {
  if (owner_.load(std::memory_order_relaxed) != std::this_thread::get_id())
    throw UsageError("spinlock released by a thread that does not hold it");
  owner_.store(std::thread::id{}, std::memory_order_relaxed);
  serving_.fetch_add(1, std::memory_order_release);
}

void FifoMutex::lock() noexcept {
  const std::uint32_t ticket = next_.fetch_add(1, std::memory_order_relaxed);
  for (;;) {
    std::uint32_t serving = serving_.load(std::memory_order_acquire);
    if (serving == ticket) break;
    serving_.wait(serving, std::memory_order_acquire);
  }
  owner_.store(std::this_thread::get_id(), std::memory_order_relaxed);
}

bool FifoMutex::try_lock() noexcept {
  std::uint32_t serving = serving_.load(std::memory_order_acquire);
  std::uint32_t expected = serving;
  if (!next_.compare_exchange_strong(expected, serving + 1, std::memory_order_acquire))
    return false;
  owner_.store(std::this_thread::get_id(), std::memory_order_relaxed);
  return true;
}

void FifoMutex::unlock() {
  if (owner_.load(std::memory_order_relaxed) != std::this_thread::get_id())
    throw UsageError("mutex released by a thread that does not hold it");
  owner_.store(std::thread::id{}, std::memory_order_relaxed);
  serving_.fetch_add(1, std::memory_order_release);
  serving_.notify_all();
}

void BaselineLock::lock() noexcept {
  if (kind_ == BaselineKind::Spinlock)
    spin_.lock();
  else
    mutex_.lock();
}

bool BaselineLock::try_lock() noexcept {
  return kind_ == BaselineKind::Spinlock ? spin_.try_lock() : mutex_.try_lock();
}

void BaselineLock::unlock() {
  if (kind_ == BaselineKind::Spinlock)
    spin_.unlock();
  else
    mutex_.unlock();
}

}  // namespace mbs::runtime
