#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mbs/sim/simulator.hpp"

namespace mbs::sim {

struct ResponseExcess {
  int task = 0;
  Ticks observed = 0;  // -1 when the job never finished
  Ticks reference = 0;
};

/// Tasks whose simulated MBS response exceeds the conservative analysis
/// bound (or never finish). Empty when the analysis rejects the set.
std::vector<ResponseExcess> conservative_bound_violations(const TaskSet& ts, const Trace& mbs);

/// Same comparison against the per-CS bound; empty when that analysis
/// rejects the set.
std::vector<ResponseExcess> paper_bound_exceedances(const TaskSet& ts, const Trace& mbs);

/// Overhead-free comparison: MBS response per task against FIFO spinning.
/// Both runs use delta = 0 and the cache costs of `cache`.
std::optional<ResponseExcess> never_worse_violation(const TaskSet& ts, Admission admission,
                                                    const CacheParams& cache = {});

/// True when MBS+R and FIFO spinning serve the same (resource, task)
/// sequence with delta = 0 under the given cache model.
bool reservation_matches_spinlock(const TaskSet& ts, Admission admission,
                                  const CacheParams& cache = {});

/// Greedy shrinking: drops tasks, turns critical sections into plain
/// execution, shortens segments and periods, as long as `still_fails`
/// holds. Every candidate is validated first.
TaskSet minimize_counterexample(TaskSet ts, const std::function<bool(const TaskSet&)>& still_fails);

}  // namespace mbs::sim
