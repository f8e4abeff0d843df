#pragma once

#include <sched.h>

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace mbs::runtime {

/// Value wrapper around the kernel's cpu_set_t.
class CpuSet {
 public:
  CpuSet() { CPU_ZERO(&set_); }
  static CpuSet single(int cpu);
  static CpuSet of(const std::vector<int>& cpus);

  void add(int cpu);
  void remove(int cpu);
  bool contains(int cpu) const;
  bool empty() const { return count() == 0; }
  int count() const { return CPU_COUNT(&set_); }
  std::vector<int> cpus() const;

  const cpu_set_t& native() const { return set_; }
  cpu_set_t& native() { return set_; }

  friend bool operator==(const CpuSet& a, const CpuSet& b) {
    return CPU_EQUAL(&a.set_, &b.set_);
  }

 private:
  cpu_set_t set_;
};

/// Number of CPUs the machine is configured with (valid core ids are below it).
int configured_cpus();

/// CPU the calling thread is executing on right now.
int current_cpu();

/// Affinity mask of the calling thread.
CpuSet thread_affinity();

/// Re-binds the calling thread. Linux moves the thread before returning when
/// its current CPU is not in `cpus`. Throws EnvironmentError on refusal.
void set_thread_affinity(const CpuSet& cpus);

/// Convenience for set_thread_affinity(CpuSet::single(cpu)).
void pin_current_thread(int cpu);

/// CPUs the process may run on.
CpuSet process_cpus();

/// Parses a comma-separated CPU id list ("3", "2,3"). Throws ConfigError.
std::vector<int> parse_cpu_list(std::string_view text);

/// Synchronization cores to use by default: MBS_SYNC_CORES when set,
/// otherwise the highest-numbered CPU available to the process.
std::vector<int> default_sync_cores();

/// CPUs available to the process minus the given synchronization cores.
std::vector<int> application_cpus(const std::vector<int>& sync_cores);

/// Bounded-spin helper: pauses for the first iterations then yields the CPU,
/// so busy waiting stays live when fewer CPUs than threads are available.
class Backoff {
 public:
  void pause();
  void reset() { spins_ = 0; }

 private:
  unsigned spins_ = 0;
};

void cpu_relax() noexcept;

}  // namespace mbs::runtime
