#include "mbs/analysis/response_time.hpp"

#include <map>

#include "mbs/error.hpp"

namespace mbs::analysis {

namespace {

Ticks ceil_div(Ticks a, Ticks b) { return (a + b - 1) / b; }

std::vector<const TaskSpec*> higher_local(const TaskSpec& t, const TaskSet& ts) {
  std::vector<const TaskSpec*> out;
  for (const auto& h : ts.tasks)
    if (h.processor == t.processor && h.priority > t.priority) out.push_back(&h);
  return out;
}

BlockingFn bounds_for(Protocol protocol) {
  switch (protocol) {
    case Protocol::MbsPaper:
      return [](const TaskSpec& t, const TaskSet& ts, Ticks) { return blocking_bound_mbs_paper(t, ts); };
    case Protocol::SpinFifo:
      return [](const TaskSpec& t, const TaskSet& ts, Ticks) { return blocking_bound_spin_fifo(t, ts); };
    default:
      break;
  }
  throw UsageError("protocol has no window-only blocking function");
}

struct Interferer {
  const TaskSpec* task;
  Ticks jitter;
  Ticks demand;
};

// Conservative analyses need the response times of higher-priority local
// tasks, so results are memoized per task set.
class ConservativeAnalyzer {
 public:
  ConservativeAnalyzer(const TaskSet& ts, bool reservation) : ts_(ts), reservation_(reservation) {}

  const ResponseTimeResult& analyze(const TaskSpec& t) {
    if (auto it = memo_.find(t.id); it != memo_.end()) return it->second;

    std::vector<Interferer> interferers;
    bool hp_ok = true;
    for (const auto* h : higher_local(t, ts_)) {
      const ResponseTimeResult& rh = analyze(*h);
      hp_ok = hp_ok && rh.schedulable;
      Ticks demand = reservation_ ? h->wcet + rh.b_remote : h->wcet;
      Ticks busy = reservation_ ? demand : h->local_execution();
      interferers.push_back({h, std::max<Ticks>(0, rh.r - busy), demand});
    }

    ResponseTimeResult res;
    res.task_id = t.id;
    res.b_local = reservation_ ? reservation_blocking(t, ts_) : 0;
    auto remote = [&](Ticks window) {
      return blocking_bound_mbs_conservative(t, ts_, window, true).b_remote;
    };
    Ticks r = t.wcet + res.b_local + remote(t.wcet);
    res.b_remote = remote(t.wcet);
    while (true) {
      Ticks br = remote(r);
      Ticks next = t.wcet + res.b_local + br;
      for (const auto& h : interferers)
        next += ceil_div(r + h.jitter, h.task->period) * h.demand;
      ++res.iterations;
      res.b_remote = br;
      if (next == r) break;
      r = next;
      if (r > t.period) break;
    }
    res.r = r;
    res.schedulable = hp_ok && r <= t.period;
    return memo_.emplace(t.id, res).first->second;
  }

 private:
  const TaskSet& ts_;
  bool reservation_;
  std::map<int, ResponseTimeResult> memo_;
};

}  // namespace

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::MbsPaper: return "mbs-paper";
    case Protocol::MbsConservative: return "mbs-conservative";
    case Protocol::MbsReservation: return "mbs-r";
    case Protocol::SpinFifo: return "spin-fifo";
  }
  return "?";
}

Protocol parse_protocol(const std::string& name) {
  for (auto p : {Protocol::MbsPaper, Protocol::MbsConservative, Protocol::MbsReservation,
                 Protocol::SpinFifo})
    if (to_string(p) == name) return p;
  throw ConfigError("unknown protocol '" + name +
                    "' (expected mbs-paper, mbs-conservative, mbs-r or spin-fifo)");
}

ResponseTimeResult response_time(const TaskSpec& t, const TaskSet& ts, const BlockingFn& bounds) {
  auto hp = higher_local(t, ts);
  ResponseTimeResult res;
  res.task_id = t.id;
  Blocking b = bounds(t, ts, t.wcet);
  Ticks r = t.wcet + b.b_local + b.b_remote;
  while (true) {
    b = bounds(t, ts, r);
    Ticks next = t.wcet + b.b_local + b.b_remote;
    for (const auto* h : hp)
      next += ceil_div(r + bounds(*h, ts, r).b_remote, h->period) * h->wcet;
    ++res.iterations;
    res.b_local = b.b_local;
    res.b_remote = b.b_remote;
    if (next == r) break;
    r = next;
    if (r > t.period) break;
  }
  res.r = r;
  res.schedulable = r <= t.period;
  return res;
}

ResponseTimeResult response_time(const TaskSpec& t, const TaskSet& ts, Protocol protocol) {
  if (protocol == Protocol::MbsConservative || protocol == Protocol::MbsReservation)
    return ConservativeAnalyzer(ts, protocol == Protocol::MbsReservation).analyze(t);
  return response_time(t, ts, bounds_for(protocol));
}

SchedulabilityReport schedulability_test(const TaskSet& input, Protocol protocol) {
  validate(input);
  TaskSet ts = expand_group_locks(input);
  validate_flat(ts);

  SchedulabilityReport report;
  report.protocol = protocol;
  ConservativeAnalyzer conservative(ts, protocol == Protocol::MbsReservation);
  bool windowed = protocol == Protocol::MbsConservative || protocol == Protocol::MbsReservation;
  for (const auto* t : ts.by_priority()) {
    ResponseTimeResult res =
        windowed ? conservative.analyze(*t) : response_time(*t, ts, bounds_for(protocol));
    report.schedulable = report.schedulable && res.schedulable;
    report.results.push_back(res);
  }
  return report;
}

}  // namespace mbs::analysis
