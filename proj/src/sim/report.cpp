#include "mbs/sim/report.hpp"

#include <map>

#include "mbs/analysis/response_time.hpp"

namespace mbs::sim {

void write_trace_csv(std::ostream& out, const Trace& tr) {
  out << "time,kind,task,core\n";
  for (const auto& e : tr.events)
    out << e.time << ',' << to_string(e.kind) << ',' << e.task << ',' << e.core << '\n';
}

void write_summary_csv(std::ostream& out, const TaskSet& ts, const Trace& tr) {
  using analysis::Protocol;
  std::map<int, analysis::Ticks> per_cs;
  std::map<int, analysis::Ticks> conservative;
  for (const auto& r : analysis::schedulability_test(ts, Protocol::MbsPaper).results)
    per_cs[r.task_id] = r.r;
  for (const auto& r : analysis::schedulability_test(ts, Protocol::MbsConservative).results)
    conservative[r.task_id] = r.r;

  out << "task,max_response,analyzed_bound_paper,analyzed_bound_conservative\n";
  for (const auto& o : observed_response_times(tr)) {
    out << o.task << ',';
    if (o.flagged())
      out << "unfinished";
    else
      out << o.max_response;
    out << ',' << per_cs[o.task] << ',' << conservative[o.task] << '\n';
  }
}

}  // namespace mbs::sim
