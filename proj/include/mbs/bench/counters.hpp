#pragma once

#include <cstdint>
#include <string>

namespace mbs::bench {

struct CounterEvent {
  std::string name;
  std::uint32_t type = 0;
  std::uint64_t config = 0;
};

/// cache-references (default), cache-misses, l1d-read-misses, llc-loads,
/// llc-load-misses, or raw:<hex>. Throws ConfigError.
CounterEvent parse_counter_event(const std::string& name);

/// One hardware counter for the calling thread, user space only. Throws
/// CapabilityError when the platform or its permissions do not allow it.
class CounterProvider {
 public:
  explicit CounterProvider(const CounterEvent& event);
  ~CounterProvider();
  CounterProvider(const CounterProvider&) = delete;
  CounterProvider& operator=(const CounterProvider&) = delete;
  CounterProvider(CounterProvider&& other) noexcept;
  CounterProvider& operator=(CounterProvider&&) = delete;

  std::uint64_t read() const;

 private:
  int fd_ = -1;
};

}  // namespace mbs::bench
