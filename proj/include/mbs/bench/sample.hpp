#pragma once

#include <cstdint>
#include <optional>

namespace mbs::bench {

struct LatencySample {
  std::uint64_t cycle_ns = 0;  // local walk, lock, critical section, unlock
  std::uint64_t cs_ns = 0;     // first to last shared-line write
  std::optional<std::uint64_t> shared_cache_accesses;
};

}  // namespace mbs::bench
