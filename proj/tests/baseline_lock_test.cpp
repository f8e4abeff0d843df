#include <gtest/gtest.h>

#include <atomic>
#include <thread>
#include <vector>

#include "mbs/error.hpp"
#include "mbs/runtime/baseline_lock.hpp"

using namespace mbs::runtime;

namespace {

long hammer(BaselineLock& lock, int threads, int iterations) {
  long counter = 0;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = 0; i < iterations; ++i) {
        baseline_lock(lock);
        ++counter;
        baseline_unlock(lock);
      }
    });
  for (auto& t : pool) t.join();
  return counter;
}

// Requests A, B, C queue up in that order while the lock is held; the
// grant order is recorded.
std::vector<char> grant_order(BaselineKind kind) {
  BaselineLock lock(kind);
  lock.lock();
  std::vector<char> order;
  std::vector<std::thread> waiters;
  std::atomic<int> queued{0};
  for (char name : {'A', 'B', 'C'}) {
    const int position = queued.load();
    waiters.emplace_back([&, name] {
      ++queued;
      lock.lock();
      order.push_back(name);
      lock.unlock();
    });
    // Tickets are drawn in lock(); give each waiter time to draw its ticket.
    while (queued.load() == position) std::this_thread::yield();
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  lock.unlock();
  for (auto& t : waiters) t.join();
  return order;
}

}  // namespace

TEST(BaselineLockTest, SpinlockCountsExactly) {
  BaselineLock lock(BaselineKind::Spinlock);
  EXPECT_EQ(hammer(lock, 4, 10'000), 40'000);
}

TEST(BaselineLockTest, MutexCountsExactly) {
  BaselineLock lock(BaselineKind::Mutex);
  EXPECT_EQ(hammer(lock, 4, 10'000), 40'000);
}

TEST(BaselineLockTest, UncontendedLockReturnsImmediately) {
  for (auto kind : {BaselineKind::Spinlock, BaselineKind::Mutex}) {
    BaselineLock lock(kind);
    lock.lock();
    EXPECT_FALSE(lock.try_lock());
    lock.unlock();
    EXPECT_TRUE(lock.try_lock());
    lock.unlock();
  }
}

TEST(BaselineLockTest, TicketOrderIsFifo) {
  EXPECT_EQ(grant_order(BaselineKind::Spinlock), (std::vector<char>{'A', 'B', 'C'}));
  EXPECT_EQ(grant_order(BaselineKind::Mutex), (std::vector<char>{'A', 'B', 'C'}));
}

TEST(BaselineLockTest, UnlockWithoutHoldIsUsageError) {
  for (auto kind : {BaselineKind::Spinlock, BaselineKind::Mutex}) {
    BaselineLock lock(kind);
    EXPECT_THROW(lock.unlock(), mbs::UsageError);
    lock.lock();
    std::thread other([&] { EXPECT_THROW(lock.unlock(), mbs::UsageError); });
    other.join();
    lock.unlock();
  }
}

TEST(BaselineLockTest, CriticalHelperReleasesOnReturn) {
  BaselineLock lock(BaselineKind::Mutex);
  EXPECT_EQ(lock.critical([] { return 3; }), 3);
  EXPECT_TRUE(lock.try_lock());
  lock.unlock();
}
