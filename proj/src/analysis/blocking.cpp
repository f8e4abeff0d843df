#include "mbs/analysis/blocking.hpp"

#include <algorithm>

#include "mbs/error.hpp"

namespace mbs::analysis {

namespace {

Ticks ceil_div(Ticks a, Ticks b) { return (a + b - 1) / b; }

int core_of(const TaskSet& ts, const std::string& resource) {
  return ts.resource(resource).sync_core;
}

struct CoreUse {
  Ticks longest = 0;
  Ticks count = 0;
};

CoreUse use_on_core(const TaskSpec& task, const TaskSet& ts, int core) {
  CoreUse use;
  for (const auto* cs : task.critical_sections()) {
    if (core_of(ts, cs->resource) != core) continue;
    use.longest = std::max(use.longest, cs->total());
    ++use.count;
  }
  return use;
}

Ticks longest_on_resource(const TaskSpec& task, const std::string& resource) {
  Ticks longest = 0;
  for (const auto* cs : task.critical_sections())
    if (cs->resource == resource) longest = std::max(longest, cs->total());
  return longest;
}

// Conservative delay of one request from t issued to `core`.
Ticks conservative_wait(const TaskSpec& t, const TaskSet& ts, int core, Ticks window,
                        bool carry_in) {
  Ticks wait = 0;
  for (const auto& other : ts.tasks) {
    if (other.id == t.id) continue;
    CoreUse use = use_on_core(other, ts, core);
    if (use.count == 0) continue;
    Ticks jobs = ceil_div(window, other.period) + (carry_in ? 1 : 0);
    wait += jobs * use.count * use.longest;
  }
  return wait;
}

}  // namespace

Blocking blocking_bound_mbs_paper(const TaskSpec& t, const TaskSet& ts) {
  Blocking b;
  for (const auto* cs : t.critical_sections()) {
    int core = core_of(ts, cs->resource);
    Ticks longest = 0;
    for (const auto& other : ts.tasks)
      if (other.id != t.id) longest = std::max(longest, use_on_core(other, ts, core).longest);
    b.b_remote += longest + 2 * ts.delta;
  }
  return b;
}

Blocking blocking_bound_mbs_conservative(const TaskSpec& t, const TaskSet& ts, Ticks window,
                                         bool carry_in) {
  if (window <= 0) throw UsageError("blocking window must be positive");
  Blocking b;
  for (const auto* cs : t.critical_sections())
    b.b_remote += conservative_wait(t, ts, core_of(ts, cs->resource), window, carry_in) +
                  2 * ts.delta;
  return b;
}

Blocking blocking_bound_spin_fifo(const TaskSpec& t, const TaskSet& ts) {
  Blocking b;
  for (const auto* cs : t.critical_sections()) {
    ts.resource(cs->resource);
    std::map<int, Ticks> per_processor;
    for (const auto& other : ts.tasks) {
      if (other.id == t.id || other.processor == t.processor) continue;
      Ticks& slot = per_processor[other.processor];
      slot = std::max(slot, longest_on_resource(other, cs->resource));
    }
    for (const auto& [processor, longest] : per_processor) b.b_remote += longest;
  }
  for (const auto& other : ts.tasks) {
    if (other.processor != t.processor || other.priority >= t.priority) continue;
    for (const auto* cs : other.critical_sections()) b.b_local = std::max(b.b_local, cs->total());
  }
  return b;
}

Ticks reservation_blocking(const TaskSpec& t, const TaskSet& ts) {
  Ticks worst = 0;
  for (const auto& lower : ts.tasks) {
    if (lower.processor != t.processor || lower.priority >= t.priority) continue;
    for (const auto* cs : lower.critical_sections()) {
      Ticks wait = conservative_wait(lower, ts, core_of(ts, cs->resource), lower.period, true);
      worst = std::max(worst, cs->total() + wait + 2 * ts.delta);
    }
  }
  return worst;
}

}  // namespace mbs::analysis
