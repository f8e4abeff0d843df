#include "mbs/runtime/cpu.hpp"

#include <pthread.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>

#include "mbs/error.hpp"

namespace mbs::runtime {

CpuSet CpuSet::single(int cpu) {
  CpuSet s;
  s.add(cpu);
  return s;
}

CpuSet CpuSet::of(const std::vector<int>& cpus) {
  CpuSet s;
  for (int c : cpus) s.add(c);
  return s;
}

void CpuSet::add(int cpu) {
  if (cpu < 0 || cpu >= CPU_SETSIZE) throw ConfigError("cpu id out of range: " + std::to_string(cpu));
  CPU_SET(cpu, &set_);
}

void CpuSet::remove(int cpu) {
  if (cpu >= 0 && cpu < CPU_SETSIZE) CPU_CLR(cpu, &set_);
}

bool CpuSet::contains(int cpu) const {
  return cpu >= 0 && cpu < CPU_SETSIZE && CPU_ISSET(cpu, &set_);
}

std::vector<int> CpuSet::cpus() const {
  std::vector<int> out;
  for (int c = 0; c < CPU_SETSIZE; ++c)
    if (CPU_ISSET(c, &set_)) out.push_back(c);
  return out;
}

int configured_cpus() {
  long n = ::sysconf(_SC_NPROCESSORS_CONF);
  return n > 0 ? static_cast<int>(n) : 1;
}

int current_cpu() { return ::sched_getcpu(); }

CpuSet thread_affinity() {
  CpuSet s;
  int rc = ::pthread_getaffinity_np(::pthread_self(), sizeof(cpu_set_t), &s.native());
  if (rc != 0) throw EnvironmentError(std::string("pthread_getaffinity_np: ") + std::strerror(rc));
  return s;
}

void set_thread_affinity(const CpuSet& cpus) {
  int rc = ::pthread_setaffinity_np(::pthread_self(), sizeof(cpu_set_t), &cpus.native());
  if (rc != 0) throw EnvironmentError(std::string("pthread_setaffinity_np: ") + std::strerror(rc));
}

void pin_current_thread(int cpu) { set_thread_affinity(CpuSet::single(cpu)); }

CpuSet process_cpus() {
  CpuSet s;
  if (::sched_getaffinity(0, sizeof(cpu_set_t), &s.native()) != 0)
    throw EnvironmentError(std::string("sched_getaffinity: ") + std::strerror(errno));
  return s;
}

std::vector<int> parse_cpu_list(std::string_view text) {
  std::vector<int> out;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    int value = -1;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || value < 0)
      throw ConfigError("invalid cpu id '" + std::string(item) + "' in cpu list");
    out.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty cpu list");
  return out;
}

std::vector<int> default_sync_cores() {
  if (const char* env = std::getenv("MBS_SYNC_CORES"); env != nullptr && *env != '\0')
    return parse_cpu_list(env);
  auto cpus = process_cpus().cpus();
  if (cpus.empty()) return {0};
  return {cpus.back()};
}

std::vector<int> application_cpus(const std::vector<int>& sync_cores) {
  CpuSet s = process_cpus();
  for (int c : sync_cores) s.remove(c);
  return s.cpus();
}

void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_ia32_pause();
#elif defined(__aarch64__)
  asm volatile("yield" ::: "memory");
#endif
}

void Backoff::pause() {
  constexpr unsigned kSpinLimit = 128;
  if (spins_ < kSpinLimit) {
    ++spins_;
    cpu_relax();
  } else {
    std::this_thread::yield();
  }
}

}  // namespace mbs::runtime
