#pragma once

#include <cstdint>

#include "mbs/analysis/task_model.hpp"

namespace mbs::sim {

/// Random periodic task set, deterministic per seed. Total utilization is
/// split with UUniFast (discarding draws with a task above 1), periods come
/// from a harmonic-friendly list so the hyperperiod stays at most 10000,
/// tasks are placed worst-fit on cores 0..n_cores-1 and get rate-monotonic
/// priorities. Each task has 0 to 2 critical sections, each at most 20% of
/// its wcet; resource k lives on synchronization core n_cores + k.
/// Throws ValidationError for non-positive counts or a utilization outside
/// (0, n_cores].
analysis::TaskSet generate_taskset(std::uint64_t seed, int n_tasks, int n_cores, int n_resources,
                                   double utilization, analysis::Ticks delta = 0);

}  // namespace mbs::sim
