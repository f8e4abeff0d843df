#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mbs/analysis/task_model.hpp"
#include "mbs/sim/cache_model.hpp"

namespace mbs::sim {

using analysis::TaskSet;

enum class SimProtocol { Mbs, MbsR, SpinFifo, Mutex };
enum class Admission { Priority, Fifo };

std::string to_string(SimProtocol p);
/// Accepts mbs, mbs-r, spin-fifo, mutex. Throws ConfigError.
SimProtocol parse_sim_protocol(const std::string& name);

struct SimParams {
  SimProtocol protocol = SimProtocol::Mbs;
  Admission admission = Admission::Priority;  // synchronization-core service order
  std::optional<Ticks> migration_cost;        // defaults to the task set's delta
  CacheParams cache;
  Ticks horizon = 1'000'000;                  // releases stop at min(hyperperiod, horizon)
  std::uint64_t seed = 0;
};

// Simultaneous state changes are processed in this order, then by task id.
enum class EventKind { Release, Start, Preempt, CsEnqueue, CsStart, CsEnd, MigrateOut, MigrateBack, Finish };

std::string to_string(EventKind k);

struct SimEvent {
  Ticks time = 0;
  EventKind kind = EventKind::Release;
  int task = 0;
  int core = 0;
  int job = 0;
  std::string resource;  // critical-section events only
};

struct JobRecord {
  int task = 0;
  int job = 0;
  Ticks release = 0;
  std::optional<Ticks> finish;
};

struct CsRecord {
  int task = 0;
  int job = 0;
  std::string resource;
  int core = 0;  // where the critical section executed
  Ticks start = 0;
  Ticks end = -1;
  int hits = 0;
  int misses = 0;
};

struct CoreUsage {
  int core = 0;
  bool sync = false;
  Ticks busy = 0;
  Ticks idle = 0;
  Ticks reserved = 0;
};

struct Trace {
  std::vector<SimEvent> events;
  std::vector<JobRecord> jobs;
  std::vector<CsRecord> critical_sections;  // in service order
  std::vector<CoreUsage> cores;
  Ticks release_horizon = 0;  // no releases at or after this time
  Ticks end_time = 0;         // simulation stopped here
};

/// Partitioned fixed-priority preemptive scheduling with synchronous
/// release at 0. After the release horizon the simulation keeps running
/// until every released job has finished or one more longest period has
/// elapsed. Group locks are expanded first; remaining nesting is rejected.
Trace simulate(const TaskSet& ts, const SimParams& params);

struct ObservedResponse {
  int task = 0;
  Ticks max_response = 0;  // over completed jobs
  int completed = 0;
  int unfinished = 0;      // jobs still running at the end: flagged

  bool flagged() const { return unfinished > 0; }
};

/// One entry per task that released a job, ordered by task id.
std::vector<ObservedResponse> observed_response_times(const Trace& tr);

/// (resource, task) pairs in critical-section service order.
std::vector<std::pair<std::string, int>> cs_service_sequence(const Trace& tr);

/// Miss-cost accesses in critical sections, excluding each task's first job.
long steady_state_misses(const Trace& tr);

}  // namespace mbs::sim
