#include "mbs/bench/counters.hpp"

#include <linux/perf_event.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "mbs/error.hpp"

namespace mbs::bench {

namespace {

constexpr std::uint64_t cache_event(std::uint64_t cache, std::uint64_t op, std::uint64_t result) {
  return cache | (op << 8) | (result << 16);
}

}  // namespace

CounterEvent parse_counter_event(const std::string& name) {
  if (name == "cache-references") return {name, PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_REFERENCES};
  if (name == "cache-misses") return {name, PERF_TYPE_HARDWARE, PERF_COUNT_HW_CACHE_MISSES};
  if (name == "l1d-read-misses")
    return {name, PERF_TYPE_HW_CACHE,
            cache_event(PERF_COUNT_HW_CACHE_L1D, PERF_COUNT_HW_CACHE_OP_READ,
                        PERF_COUNT_HW_CACHE_RESULT_MISS)};
  if (name == "llc-loads")
    return {name, PERF_TYPE_HW_CACHE,
            cache_event(PERF_COUNT_HW_CACHE_LL, PERF_COUNT_HW_CACHE_OP_READ,
                        PERF_COUNT_HW_CACHE_RESULT_ACCESS)};
  if (name == "llc-load-misses")
    return {name, PERF_TYPE_HW_CACHE,
            cache_event(PERF_COUNT_HW_CACHE_LL, PERF_COUNT_HW_CACHE_OP_READ,
                        PERF_COUNT_HW_CACHE_RESULT_MISS)};
  if (name.rfind("raw:", 0) == 0) {
    try {
      std::size_t used = 0;
      std::uint64_t config = std::stoull(name.substr(4), &used, 16);
      if (used == name.size() - 4) return {name, PERF_TYPE_RAW, config};
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown counter event '" + name +
                    "' (expected cache-references, cache-misses, l1d-read-misses, llc-loads, "
                    "llc-load-misses or raw:<hex>)");
}

CounterProvider::CounterProvider(const CounterEvent& event) {
  perf_event_attr attr;
  std::memset(&attr, 0, sizeof(attr));
  attr.size = sizeof(attr);
  attr.type = event.type;
  attr.config = event.config;
  attr.exclude_kernel = 1;
  attr.exclude_hv = 1;
  long fd = syscall(SYS_perf_event_open, &attr, 0, -1, -1, 0);
  if (fd < 0)
    throw CapabilityError("hardware counter '" + event.name +
                          "' unavailable: " + std::strerror(errno));
  fd_ = static_cast<int>(fd);
}

CounterProvider::CounterProvider(CounterProvider&& other) noexcept : fd_(other.fd_) {
  other.fd_ = -1;
}

CounterProvider::~CounterProvider() {
  if (fd_ >= 0) close(fd_);
}

std::uint64_t CounterProvider::read() const {
  std::uint64_t value = 0;
  if (::read(fd_, &value, sizeof(value)) != static_cast<ssize_t>(sizeof(value)))
    throw CapabilityError("reading hardware counter failed");
  return value;
}

}  // namespace mbs::bench
