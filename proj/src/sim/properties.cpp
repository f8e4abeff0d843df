#include "mbs/sim/properties.hpp"

#include <map>

#include "mbs/analysis/response_time.hpp"
#include "mbs/error.hpp"

namespace mbs::sim {

using analysis::Protocol;
using analysis::Segment;

namespace {

std::vector<ResponseExcess> exceeding(const TaskSet& ts, const Trace& tr, Protocol protocol) {
  auto report = analysis::schedulability_test(ts, protocol);
  if (!report.schedulable) return {};
  std::map<int, Ticks> bound;
  for (const auto& r : report.results) bound[r.task_id] = r.r;
  std::vector<ResponseExcess> out;
  for (const auto& o : observed_response_times(tr)) {
    if (o.flagged())
      out.push_back({o.task, -1, bound[o.task]});
    else if (o.max_response > bound[o.task])
      out.push_back({o.task, o.max_response, bound[o.task]});
  }
  return out;
}

SimParams overhead_free(SimProtocol p, Admission a, const CacheParams& cache) {
  SimParams sp;
  sp.protocol = p;
  sp.admission = a;
  sp.migration_cost = 0;
  sp.cache = cache;
  return sp;
}

bool valid(const TaskSet& ts) {
  try {
    analysis::validate(ts);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

void recompute_wcet(analysis::TaskSpec& t) {
  t.wcet = 0;
  for (const auto& s : t.segments) t.wcet += s.total();
}

// Merges adjacent execution segments so removals keep the list canonical.
void merge_exec(analysis::TaskSpec& t) {
  std::vector<Segment> out;
  for (const auto& s : t.segments) {
    if (!s.is_cs() && !out.empty() && !out.back().is_cs())
      out.back().duration += s.duration;
    else
      out.push_back(s);
  }
  t.segments = std::move(out);
}

}  // namespace

std::vector<ResponseExcess> conservative_bound_violations(const TaskSet& ts, const Trace& mbs) {
  return exceeding(ts, mbs, Protocol::MbsConservative);
}

std::vector<ResponseExcess> paper_bound_exceedances(const TaskSet& ts, const Trace& mbs) {
  return exceeding(ts, mbs, Protocol::MbsPaper);
}

std::optional<ResponseExcess> never_worse_violation(const TaskSet& ts, Admission admission,
                                                    const CacheParams& cache) {
  auto mbs = observed_response_times(simulate(ts, overhead_free(SimProtocol::Mbs, admission, cache)));
  auto spin = observed_response_times(
      simulate(ts, overhead_free(SimProtocol::SpinFifo, admission, cache)));
  for (size_t i = 0; i < mbs.size() && i < spin.size(); ++i) {
    if (mbs[i].flagged() && !spin[i].flagged()) return ResponseExcess{mbs[i].task, -1, spin[i].max_response};
    if (!spin[i].flagged() && mbs[i].max_response > spin[i].max_response)
      return ResponseExcess{mbs[i].task, mbs[i].max_response, spin[i].max_response};
  }
  return std::nullopt;
}

bool reservation_matches_spinlock(const TaskSet& ts, Admission admission, const CacheParams& cache) {
  auto r = simulate(ts, overhead_free(SimProtocol::MbsR, admission, cache));
  auto s = simulate(ts, overhead_free(SimProtocol::SpinFifo, admission, cache));
  return cs_service_sequence(r) == cs_service_sequence(s);
}

TaskSet minimize_counterexample(TaskSet ts, const std::function<bool(const TaskSet&)>& still_fails) {
  auto accept = [&](const TaskSet& candidate) {
    if (!valid(candidate)) return false;
    try {
      if (!still_fails(candidate)) return false;
    } catch (const ValidationError&) {
      return false;
    }
    ts = candidate;
    return true;
  };
  bool progress = true;
  while (progress) {
    progress = false;
    for (size_t i = 0; i < ts.tasks.size() && !progress; ++i) {
      TaskSet c = ts;
      c.tasks.erase(c.tasks.begin() + static_cast<long>(i));
      progress = accept(c);
    }
    for (size_t i = 0; i < ts.tasks.size() && !progress; ++i) {
      for (size_t s = 0; s < ts.tasks[i].segments.size() && !progress; ++s) {
        const Segment seg = ts.tasks[i].segments[s];
        TaskSet c = ts;
        auto& t = c.tasks[i];
        if (seg.is_cs()) {
          t.segments[s] = Segment::exec(seg.duration);
        } else if (t.segments.size() > 1) {
          t.segments.erase(t.segments.begin() + static_cast<long>(s));
        } else {
          continue;
        }
        merge_exec(t);
        recompute_wcet(t);
        progress = accept(c);
      }
    }
    for (size_t i = 0; i < ts.tasks.size() && !progress; ++i) {
      for (size_t s = 0; s < ts.tasks[i].segments.size() && !progress; ++s) {
        Ticks d = ts.tasks[i].segments[s].duration;
        for (Ticks shorter : {d / 2, d - 1}) {
          if (shorter < 1 || shorter >= d) continue;
          TaskSet c = ts;
          c.tasks[i].segments[s].duration = shorter;
          recompute_wcet(c.tasks[i]);
          if ((progress = accept(c))) break;
        }
      }
    }
    for (size_t i = 0; i < ts.tasks.size() && !progress; ++i) {
      Ticks p = ts.tasks[i].period;
      if (p % 2 != 0 || p / 2 < ts.tasks[i].wcet) continue;
      TaskSet c = ts;
      c.tasks[i].period = p / 2;
      progress = accept(c);
    }
    // Unused resources.
    for (size_t k = 0; k < ts.resources.size() && !progress; ++k) {
      TaskSet c = ts;
      c.resources.erase(c.resources.begin() + static_cast<long>(k));
      progress = accept(c);
    }
  }
  return ts;
}

}  // namespace mbs::sim
