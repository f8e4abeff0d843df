#pragma once

#include <ostream>

#include "mbs/sim/simulator.hpp"

namespace mbs::sim {

/// time,kind,task,core
void write_trace_csv(std::ostream& out, const Trace& tr);

/// task,max_response,analyzed_bound_paper,analyzed_bound_conservative
/// Unfinished tasks report max_response as "unfinished".
void write_summary_csv(std::ostream& out, const TaskSet& ts, const Trace& tr);

}  // namespace mbs::sim
