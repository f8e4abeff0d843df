#include "mbs/runtime/sync_core.hpp"

#include <time.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "mbs/error.hpp"
#include "mbs/runtime/cpu.hpp"

namespace mbs::runtime {

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::set<int>& claimed() {
  static std::set<int> s;
  return s;
}

std::map<int, long>& nesting_ranks() {
  static std::map<int, long> ranks;
  return ranks;
}

thread_local const SyncCore* tls_executor = nullptr;

}  // namespace

std::int64_t monotonic_ns() noexcept {
  timespec ts{};
  ::clock_gettime(CLOCK_MONOTONIC_RAW, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1'000'000'000 + ts.tv_nsec;
}

std::shared_ptr<SyncCore> SyncCore::create(int core_id, AdmissionPolicy policy, IdleMode idle) {
  Options options;
  options.policy = policy;
  options.idle = idle;
  return create(core_id, options);
}

std::shared_ptr<SyncCore> SyncCore::create(int core_id, Options options) {
  if (core_id < 0 || core_id >= configured_cpus())
    throw ConfigError("core " + std::to_string(core_id) + " does not exist (machine has " +
                      std::to_string(configured_cpus()) + " cpus)");
  {
    std::lock_guard lk(registry_mutex());
    if (!claimed().insert(core_id).second)
      throw UsageError("core " + std::to_string(core_id) + " is already a synchronization core");
  }
  std::shared_ptr<SyncCore> core(new SyncCore(core_id, options));
  std::promise<void> ready;
  auto started = ready.get_future();
  core->executor_ = std::thread([raw = core.get(), &ready] { raw->run(ready); });
  try {
    started.get();
  } catch (...) {
    core->stop_.store(true);
    core->executor_.join();
    core->state_.store(CoreState::ShutDown);
    core->release_claim();
    throw;
  }
  return core;
}

SyncCore::SyncCore(int core_id, Options options)
    : core_id_(core_id), options_(options), queue_(Later{options.policy}) {}

SyncCore::~SyncCore() {
  if (executor_.joinable()) {
    try {
      shutdown(true);
    } catch (...) {
    }
  }
  release_claim();
}

void SyncCore::release_claim() noexcept {
  std::lock_guard lk(registry_mutex());
  if (claim_held_) claimed().erase(core_id_);
  claim_held_ = false;
}

void SyncCore::run(std::promise<void>& ready) {
  try {
    pin_current_thread(core_id_);
  } catch (...) {
    ready.set_exception(std::current_exception());
    return;
  }
  executor_id_ = std::this_thread::get_id();
  tls_executor = this;
  ready.set_value();

  for (;;) {
    if (detail::Request* request = pop()) {
      serve(*request);
      continue;
    }
    if (stop_.load(std::memory_order_acquire)) break;
    idle_wait();
  }
  tls_executor = nullptr;
}

detail::Request* SyncCore::pop() {
  if (pending_.load(std::memory_order_acquire) == 0) return nullptr;
  std::lock_guard lk(queue_mutex_);
  if (queue_.empty()) return nullptr;
  detail::Request* top = queue_.top();
  queue_.pop();
  active_.store(true, std::memory_order_release);
  pending_.fetch_sub(1, std::memory_order_acq_rel);
  return top;
}

void SyncCore::idle_wait() {
  if (options_.idle == IdleMode::Park) {
    std::uint32_t seen = wake_.load(std::memory_order_acquire);
    if (pending_.load(std::memory_order_acquire) != 0 || stop_.load(std::memory_order_acquire))
      return;
    wake_.wait(seen, std::memory_order_acquire);
    return;
  }
  Backoff backoff;
  while (pending_.load(std::memory_order_acquire) == 0 &&
         !stop_.load(std::memory_order_acquire))
    backoff.pause();
}

void SyncCore::serve(detail::Request& request) {
  ServiceRecord record;
  if (options_.record_service) {
    record.seqno = request.seqno;
    record.priority = request.priority;
    record.requester = request.requester;
    record.enqueue_ns = request.enqueue_ns;
    record.start_ns = monotonic_ns();
    record.cpu = current_cpu();
  }
  request.execute();  // `request` may be destroyed from here on
  if (options_.record_service) {
    record.end_ns = monotonic_ns();
    std::lock_guard lk(log_mutex_);
    log_.push_back(record);
  }
  served_.fetch_add(1, std::memory_order_acq_rel);
}

void SyncCore::enqueue(detail::Request& request) {
  {
    std::lock_guard lk(queue_mutex_);
    if (state_.load(std::memory_order_acquire) != CoreState::Running)
      throw UsageError("synchronization core " + std::to_string(core_id_) + " is shut down");
    request.seqno = next_seqno_++;
    request.enqueue_ns = monotonic_ns();
    queue_.push(&request);
    pending_.fetch_add(1, std::memory_order_acq_rel);
  }
  if (options_.idle == IdleMode::Park) {
    wake_.fetch_add(1, std::memory_order_acq_rel);
    wake_.notify_one();
  }
}

void SyncCore::shutdown(bool drain) {
  if (on_executor()) throw UsageError("shutdown called from inside a critical section");
  {
    std::lock_guard lk(queue_mutex_);
    if (state_.load() != CoreState::Running) {
      // already stopping or stopped
    } else {
      if (!drain && (!queue_.empty() || active_.load(std::memory_order_acquire)))
        throw UsageError("synchronization core " + std::to_string(core_id_) +
                         " has queued or running critical sections; use drain");
      state_.store(CoreState::Draining, std::memory_order_release);
    }
  }
  stop_.store(true, std::memory_order_release);
  wake_.fetch_add(1, std::memory_order_acq_rel);
  wake_.notify_one();
  {
    std::lock_guard lk(join_mutex_);
    if (executor_.joinable()) executor_.join();
  }
  state_.store(CoreState::ShutDown, std::memory_order_release);
  release_claim();
}

std::vector<ServiceRecord> SyncCore::service_log() const {
  std::lock_guard lk(log_mutex_);
  return log_;
}

bool SyncCore::on_executor() const noexcept { return tls_executor == this; }

void SyncCore::set_nesting_order(std::vector<int> cores) {
  std::lock_guard lk(registry_mutex());
  auto& ranks = nesting_ranks();
  ranks.clear();
  for (std::size_t i = 0; i < cores.size(); ++i) ranks.emplace(cores[i], static_cast<long>(i));
}

long SyncCore::nesting_rank(int core_id) {
  std::lock_guard lk(registry_mutex());
  const auto& ranks = nesting_ranks();
  if (auto it = ranks.find(core_id); it != ranks.end()) return it->second;
  return static_cast<long>(ranks.size()) + core_id;
}

std::vector<int> SyncCore::claimed_cores() {
  std::lock_guard lk(registry_mutex());
  return {claimed().begin(), claimed().end()};
}

}  // namespace mbs::runtime
