#pragma once

#include "mbs/analysis/task_model.hpp"

namespace mbs::analysis {

struct Blocking {
  Ticks b_local = 0;
  Ticks b_remote = 0;

  friend bool operator==(const Blocking&, const Blocking&) = default;
};

// Per critical section: the longest critical section of any other task on
// the same synchronization core, plus 2 delta.
Blocking blocking_bound_mbs_paper(const TaskSpec& t, const TaskSet& ts);

// Per critical section: every job of every other task that can overlap
// `window` contributes all of its critical sections on the same
// synchronization core, plus 2 delta. With carry_in one extra job per
// competitor is counted. Monotone in window.
Blocking blocking_bound_mbs_conservative(const TaskSpec& t, const TaskSet& ts, Ticks window,
                                         bool carry_in = false);

// Non-preemptive FIFO spinning: per critical section on R, the longest
// critical section on R from each other processor; locally, the longest
// critical section of any lower-priority task on the same processor.
Blocking blocking_bound_spin_fifo(const TaskSpec& t, const TaskSet& ts);

// Longest stretch for which a lower-priority task on t's processor can keep
// that processor reserved under MBS+R: its critical section, its
// conservative wait at the synchronization core, and both migrations.
Ticks reservation_blocking(const TaskSpec& t, const TaskSet& ts);

}  // namespace mbs::analysis
