#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "mbs/analysis/response_time.hpp"
#include "mbs/error.hpp"
#include "mbs/sim/generator.hpp"
#include "mbs/sim/fuzz.hpp"
#include "mbs/sim/properties.hpp"
#include "mbs/sim/report.hpp"
#include "mbs/sim/simulator.hpp"

using namespace mbs::sim;
using mbs::analysis::Segment;
using mbs::analysis::TaskSpec;

namespace {

TaskSpec cs_task(int id, Ticks period, int priority, int processor, const std::string& r,
                 Ticks before, Ticks cs, Ticks after) {
  std::vector<Segment> segs;
  if (before > 0) segs.push_back(Segment::exec(before));
  segs.push_back(Segment::cs(r, cs));
  if (after > 0) segs.push_back(Segment::exec(after));
  return {id, period, before + cs + after, priority, processor, segs};
}

SimParams params_for(SimProtocol p, Admission a = Admission::Priority) {
  SimParams sp;
  sp.protocol = p;
  sp.admission = a;
  return sp;
}

int count(const Trace& tr, EventKind kind, int core = -1) {
  int n = 0;
  for (const auto& e : tr.events)
    if (e.kind == kind && (core == -1 || e.core == core)) ++n;
  return n;
}

Ticks response_of(const Trace& tr, int task) {
  for (const auto& o : observed_response_times(tr))
    if (o.task == task) return o.max_response;
  return -1;
}

// Structural checks every trace must pass.
void check_invariants(const TaskSet& ts, const Trace& tr, SimProtocol protocol) {
  for (size_t i = 1; i < tr.events.size(); ++i)
    ASSERT_LE(tr.events[i - 1].time, tr.events[i].time);

  for (const auto& c : tr.cores) ASSERT_EQ(c.busy + c.idle + c.reserved, tr.end_time) << c.core;

  // Mutual exclusion: per resource, and per synchronization core for MBS.
  std::map<std::string, std::vector<std::pair<Ticks, Ticks>>> by_key;
  bool mbs = protocol == SimProtocol::Mbs || protocol == SimProtocol::MbsR;
  for (const auto& cs : tr.critical_sections) {
    Ticks end = cs.end < 0 ? tr.end_time : cs.end;
    by_key["r:" + cs.resource].push_back({cs.start, end});
    if (mbs) by_key["c:" + std::to_string(cs.core)].push_back({cs.start, end});
  }
  for (auto& [key, spans] : by_key) {
    std::sort(spans.begin(), spans.end());
    for (size_t i = 1; i < spans.size(); ++i)
      ASSERT_LE(spans[i - 1].second, spans[i].first) << key;
  }

  // Start/Preempt nesting per application core.
  std::map<int, int> occupant;
  for (const auto& e : tr.events) {
    bool app = std::any_of(ts.tasks.begin(), ts.tasks.end(),
                           [&](const TaskSpec& t) { return t.processor == e.core; });
    if (!app) continue;
    int& who = occupant.try_emplace(e.core, -1).first->second;
    switch (e.kind) {
      case EventKind::Start:
        ASSERT_EQ(who, -1) << "t=" << e.time << " core " << e.core;
        who = e.task;
        break;
      case EventKind::Preempt:
      case EventKind::MigrateOut:
        ASSERT_EQ(who, e.task) << "t=" << e.time << " core " << e.core;
        who = -1;
        break;
      case EventKind::Finish:
        if (who == e.task) who = -1;
        break;
      default:
        break;
    }
  }
}

}  // namespace

TEST(SimulatorTest, SingleTaskMbsHandSchedule) {
  TaskSet ts;
  ts.resources = {{"R", 1, {}}};
  ts.tasks = {cs_task(1, 10, 1, 0, "R", 1, 3, 1)};
  Trace tr = simulate(ts, params_for(SimProtocol::Mbs));
  EXPECT_EQ(response_of(tr, 1), 5);
  EXPECT_EQ(count(tr, EventKind::CsStart), 1);
  EXPECT_EQ(count(tr, EventKind::CsStart, 1), 1);
  ASSERT_EQ(tr.critical_sections.size(), 1u);
  EXPECT_EQ(tr.critical_sections[0].start, 1);
  EXPECT_EQ(tr.critical_sections[0].end, 4);
  check_invariants(ts, tr, SimProtocol::Mbs);
}

TEST(SimulatorTest, MigrationCostIsPaidBothWays) {
  TaskSet ts;
  ts.delta = 2;
  ts.resources = {{"R", 1, {}}};
  ts.tasks = {cs_task(1, 20, 1, 0, "R", 1, 3, 1)};
  Trace tr = simulate(ts, params_for(SimProtocol::Mbs));
  EXPECT_EQ(response_of(tr, 1), 5 + 4);
  EXPECT_EQ(tr.critical_sections.at(0).start, 3);
  SimParams sp = params_for(SimProtocol::Mbs);
  sp.migration_cost = 0;
  EXPECT_EQ(response_of(simulate(ts, sp), 1), 5);
}

TEST(SimulatorTest, MbsFreesOriginCoreForLowerPriorityWork) {
  TaskSet ts;
  ts.resources = {{"R", 1, {}}};
  ts.tasks = {cs_task(1, 20, 2, 0, "R", 1, 4, 1), {2, 20, 3, 1, 0, {Segment::exec(3)}}};
  ts.tasks[1].priority = 1;
  Trace mbs = simulate(ts, params_for(SimProtocol::Mbs));
  // T2 runs on core 0 while T1's critical section executes remotely.
  EXPECT_EQ(response_of(mbs, 1), 6);
  EXPECT_EQ(response_of(mbs, 2), 4);
  check_invariants(ts, mbs, SimProtocol::Mbs);

  Trace reserved = simulate(ts, params_for(SimProtocol::MbsR));
  EXPECT_EQ(response_of(reserved, 1), 6);
  EXPECT_EQ(response_of(reserved, 2), 9);
  EXPECT_EQ(reserved.cores.at(0).reserved, 4);
  check_invariants(ts, reserved, SimProtocol::MbsR);

  Trace spin = simulate(ts, params_for(SimProtocol::SpinFifo));
  EXPECT_EQ(response_of(spin, 2), 9);
}

TEST(SimulatorTest, SpinTicketsFollowTaskIdOnSimultaneousRequests) {
  TaskSet ts;
  ts.resources = {{"R", 9, {}}};
  ts.tasks = {cs_task(2, 20, 1, 1, "R", 1, 3, 1), cs_task(1, 20, 2, 2, "R", 1, 3, 1)};
  Trace tr = simulate(ts, params_for(SimProtocol::SpinFifo));
  auto seq = cs_service_sequence(tr);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0].second, 1);
  EXPECT_EQ(seq[1].second, 2);
  EXPECT_EQ(response_of(tr, 1), 5);
  EXPECT_EQ(response_of(tr, 2), 8);
  check_invariants(ts, tr, SimProtocol::SpinFifo);
}

TEST(SimulatorTest, SyncCoreAdmissionPolicies) {
  // Three requests reach the synchronization core while it is busy.
  TaskSet ts;
  ts.resources = {{"R", 9, {}}};
  ts.tasks = {cs_task(1, 100, 1, 0, "R", 1, 5, 1), cs_task(2, 100, 2, 1, "R", 2, 2, 1),
              cs_task(3, 100, 5, 2, "R", 3, 2, 1), cs_task(4, 100, 3, 3, "R", 4, 2, 1)};
  auto order = [&](Admission a) {
    std::vector<int> out;
    for (const auto& [r, task] : cs_service_sequence(simulate(ts, params_for(SimProtocol::Mbs, a))))
      out.push_back(task);
    return out;
  };
  EXPECT_EQ(order(Admission::Priority), (std::vector<int>{1, 3, 4, 2}));
  EXPECT_EQ(order(Admission::Fifo), (std::vector<int>{1, 2, 3, 4}));
}

TEST(SimulatorTest, MutexSuspendsInFifoOrder) {
  TaskSet ts;
  ts.resources = {{"R", 9, {}}};
  ts.tasks = {cs_task(1, 50, 1, 0, "R", 1, 6, 1), cs_task(2, 50, 3, 1, "R", 2, 2, 1),
              {3, 50, 4, 2, 1, {Segment::exec(4)}}};
  Trace tr = simulate(ts, params_for(SimProtocol::Mutex));
  check_invariants(ts, tr, SimProtocol::Mutex);
  // T2 requests at 2 while T1 holds R until 7; T3 runs on core 1 meanwhile.
  EXPECT_EQ(response_of(tr, 1), 8);
  EXPECT_EQ(response_of(tr, 2), 10);
  EXPECT_EQ(response_of(tr, 3), 6);
  EXPECT_GE(count(tr, EventKind::Preempt, 1), 1);
}

TEST(SimulatorTest, PreloadedSyncCoreNeverMisses) {
  TaskSet ts;
  ts.resources = {{"R", 9, {}}};
  ts.tasks = {cs_task(1, 10, 2, 0, "R", 1, 2, 1), cs_task(2, 20, 1, 1, "R", 2, 2, 1)};
  SimParams sp = params_for(SimProtocol::Mbs);
  sp.cache.default_lines = 16;
  sp.cache.hit_cost = 0;
  sp.cache.miss_cost = 1;
  sp.cache.preload_sync_cores = true;
  Trace tr = simulate(ts, sp);
  long misses = 0;
  for (const auto& cs : tr.critical_sections) misses += cs.misses;
  EXPECT_EQ(misses, 0);
  EXPECT_GT(tr.critical_sections.size(), 2u);
}

TEST(SimulatorTest, LocalityDependsOnProtocolAndFootprint) {
  TaskSet ts;
  ts.resources = {{"R", 9, {}}};
  ts.tasks = {cs_task(1, 100, 2, 0, "R", 1, 2, 1), cs_task(2, 200, 1, 1, "R", 2, 2, 1)};
  SimParams sp;
  sp.cache.default_lines = 8;
  sp.cache.l1_capacity_lines = 16;
  sp.cache.hit_cost = 0;
  sp.cache.miss_cost = 1;
  sp.protocol = SimProtocol::Mbs;
  EXPECT_EQ(steady_state_misses(simulate(ts, sp)), 0);
  sp.protocol = SimProtocol::SpinFifo;
  EXPECT_GT(steady_state_misses(simulate(ts, sp)), 0);
  sp.protocol = SimProtocol::Mutex;
  EXPECT_GT(steady_state_misses(simulate(ts, sp)), 0);

  sp.cache.default_lines = 32;
  for (auto p : {SimProtocol::Mbs, SimProtocol::MbsR, SimProtocol::SpinFifo, SimProtocol::Mutex}) {
    sp.protocol = p;
    EXPECT_GT(steady_state_misses(simulate(ts, sp)), 0) << to_string(p);
  }
}

TEST(SimulatorTest, CacheCostsExtendCriticalSections) {
  TaskSet ts;
  ts.resources = {{"R", 9, {}}};
  ts.tasks = {cs_task(1, 20, 1, 0, "R", 1, 2, 1)};
  SimParams sp = params_for(SimProtocol::SpinFifo);
  sp.cache.default_lines = 4;
  sp.cache.hit_cost = 1;
  sp.cache.miss_cost = 3;
  Trace tr = simulate(ts, sp);
  EXPECT_EQ(response_of(tr, 1), 4 + 4 * 3);
  EXPECT_EQ(tr.critical_sections.at(0).misses, 4);
}

TEST(SimulatorTest, RejectsBadParameters) {
  TaskSet ts;
  ts.resources = {{"R", 9, {}}};
  ts.tasks = {cs_task(1, 20, 1, 0, "R", 1, 2, 1)};
  SimParams sp;
  sp.horizon = 0;
  EXPECT_THROW(simulate(ts, sp), mbs::ValidationError);
  sp = {};
  sp.cache.hit_cost = 3;
  sp.cache.miss_cost = 1;
  EXPECT_THROW(simulate(ts, sp), mbs::ValidationError);
  sp = {};
  ts.tasks[0].processor = 9;
  EXPECT_THROW(simulate(ts, sp), mbs::ValidationError);
  EXPECT_THROW(parse_sim_protocol("rcu"), mbs::ConfigError);
}

TEST(SimulatorTest, HorizonCapsReleases) {
  TaskSet ts;
  ts.tasks = {{1, 10, 2, 2, 0, {Segment::exec(2)}}};
  SimParams sp;
  sp.horizon = 35;
  Trace tr = simulate(ts, sp);
  EXPECT_EQ(tr.release_horizon, 10);  // hyperperiod
  EXPECT_EQ(tr.jobs.size(), 1u);
  ts.tasks.push_back({2, 15, 1, 0, 0, {Segment::exec(1)}});
  tr = simulate(ts, sp);
  EXPECT_EQ(tr.release_horizon, 30);
  EXPECT_EQ(count(tr, EventKind::Release), 3 + 2);
}

TEST(ObservedResponseTest, MaxOverJobsAndUnfinishedFlagged) {
  Trace tr;
  tr.jobs = {{1, 0, 0, 5}};
  auto o = observed_response_times(tr);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(o[0].max_response, 5);

  tr.jobs = {{1, 0, 0, 3}, {1, 1, 10, 17}};
  EXPECT_EQ(observed_response_times(tr)[0].max_response, 7);

  tr.jobs.push_back({1, 2, 20, std::nullopt});
  o = observed_response_times(tr);
  EXPECT_TRUE(o[0].flagged());
  EXPECT_EQ(o[0].unfinished, 1);
  EXPECT_EQ(o[0].completed, 2);
}

TEST(SimulatorTest, OverloadLeavesUnfinishedJobsFlagged) {
  TaskSet ts;
  ts.tasks = {{1, 10, 25, 1, 0, {Segment::exec(25)}}, {2, 20, 1, 2, 0, {Segment::exec(1)}}};
  Trace tr = simulate(ts, SimParams{});
  auto o = observed_response_times(tr);
  EXPECT_TRUE(o[0].flagged());
}

TEST(GeneratorTest, DeterministicPerSeed) {
  EXPECT_EQ(generate_taskset(42, 5, 2, 2, 1.2), generate_taskset(42, 5, 2, 2, 1.2));
  EXPECT_NE(generate_taskset(42, 5, 2, 2, 1.2), generate_taskset(43, 5, 2, 2, 1.2));
}

TEST(GeneratorTest, RejectsImpossibleTargets) {
  EXPECT_THROW(generate_taskset(1, 4, 2, 1, 0.0), mbs::ValidationError);
  EXPECT_THROW(generate_taskset(1, 4, 2, 1, 2.5), mbs::ValidationError);
  EXPECT_THROW(generate_taskset(1, 0, 2, 1, 0.5), mbs::ValidationError);
}

TEST(GeneratorTest, NoResourcesMeansNoCriticalSections) {
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (const auto& t : generate_taskset(seed, 6, 3, 0, 1.5).tasks)
      EXPECT_TRUE(t.critical_sections().empty());
}

TEST(GeneratorTest, ShapeOfGeneratedSets) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    TaskSet ts = generate_taskset(seed, 6, 3, 2, 1.5);
    mbs::analysis::validate(ts);
    EXPECT_LE(ts.hyperperiod(), 10000);
    std::set<int> prio;
    for (const auto& t : ts.tasks) {
      prio.insert(t.priority);
      EXPECT_LE(t.critical_sections().size(), 2u);
      for (const auto* cs : t.critical_sections()) EXPECT_LE(cs->duration * 5, t.wcet);
      EXPECT_LT(t.processor, 3);
    }
    EXPECT_EQ(prio.size(), ts.tasks.size());
    for (size_t k = 0; k < ts.resources.size(); ++k) EXPECT_EQ(ts.resources[k].sync_core, 3 + (int)k);
  }
}

TEST(SimulatorPropertyTest, InvariantsHoldOnRandomSets) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    TaskSet ts = generate_taskset(seed, 5, 2, 2, 0.9, seed % 3);
    for (auto p : {SimProtocol::Mbs, SimProtocol::MbsR, SimProtocol::SpinFifo, SimProtocol::Mutex}) {
      SimParams sp = params_for(p);
      sp.cache.default_lines = 4;
      sp.cache.hit_cost = 1;
      sp.cache.miss_cost = 2;
      Trace tr = simulate(ts, sp);
      check_invariants(ts, tr, p);
      for (const auto& o : observed_response_times(tr)) EXPECT_FALSE(o.flagged());
    }
  }
}

TEST(SimulatorPropertyTest, Deterministic) {
  TaskSet ts = generate_taskset(9, 6, 3, 2, 1.8);
  std::ostringstream a, b;
  write_trace_csv(a, simulate(ts, params_for(SimProtocol::Mbs)));
  write_trace_csv(b, simulate(ts, params_for(SimProtocol::Mbs)));
  EXPECT_EQ(a.str(), b.str());
}

TEST(SimulatorPropertyTest, ReservationMatchesSpinlockScheduleWithoutOverheads) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    TaskSet ts = generate_taskset(seed, 6, 3, 2, 1.5);
    Trace r = simulate(ts, params_for(SimProtocol::MbsR, Admission::Fifo));
    Trace s = simulate(ts, params_for(SimProtocol::SpinFifo));
    ASSERT_EQ(cs_service_sequence(r), cs_service_sequence(s)) << "seed " << seed;
  }
}

TEST(SimulatorPropertyTest, ObservedWithinConservativeBound) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    TaskSet ts = generate_taskset(seed, 5, 2, 2, 0.8, seed % 2);
    auto report = mbs::analysis::schedulability_test(ts, mbs::analysis::Protocol::MbsConservative);
    if (!report.schedulable) continue;
    ++compared;
    std::map<int, Ticks> bound;
    for (const auto& res : report.results) bound[res.task_id] = res.r;
    for (const auto& o : observed_response_times(simulate(ts, params_for(SimProtocol::Mbs)))) {
      ASSERT_FALSE(o.flagged());
      ASSERT_LE(o.max_response, bound[o.task]) << "seed " << seed << " task " << o.task;
    }
  }
  EXPECT_GT(compared, 50);
}

TEST(ReportTest, CsvHeadersAndRows) {
  TaskSet ts;
  ts.resources = {{"R", 1, {}}};
  ts.tasks = {cs_task(1, 10, 1, 0, "R", 1, 3, 1)};
  Trace tr = simulate(ts, params_for(SimProtocol::Mbs));
  std::ostringstream trace, summary;
  write_trace_csv(trace, tr);
  write_summary_csv(summary, ts, tr);
  EXPECT_EQ(trace.str().substr(0, trace.str().find('\n')), "time,kind,task,core");
  EXPECT_EQ(summary.str(),
            "task,max_response,analyzed_bound_paper,analyzed_bound_conservative\n1,5,5,5\n");
  EXPECT_NE(trace.str().find("1,CsStart,1,1\n"), std::string::npos);
}

TEST(PropertyHelperTest, NeverWorseDetectorReportsSyncCoreInversion) {
  // Under MBS the low-priority task reaches its critical section while the
  // high-priority task is away; the next high-priority request then waits
  // behind it at the synchronization core.
  TaskSet ts;
  ts.resources = {{"R0", 1, {}}};
  ts.tasks = {{2, 125, 8, 2, 0, {Segment::exec(8)}},
              {3, 100, 4, 5, 0, {Segment::exec(2), Segment::cs("R0", 1), Segment::exec(1)}},
              {4, 625, 134, 1, 0, {Segment::exec(130), Segment::cs("R0", 4)}}};
  auto v = never_worse_violation(ts, Admission::Fifo);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->task, 3);
  EXPECT_EQ(v->observed, 5);
  EXPECT_EQ(v->reference, 4);
  EXPECT_TRUE(reservation_matches_spinlock(ts, Admission::Fifo));
}

TEST(PropertyHelperTest, MinimizerKeepsFailureAndShrinks) {
  TaskSet ts = generate_taskset(2, 5, 1, 1, 0.7);
  auto fails = [](const TaskSet& t) { return never_worse_violation(t, Admission::Fifo).has_value(); };
  if (!fails(ts)) GTEST_SKIP() << "seed produced no counterexample";
  TaskSet small = minimize_counterexample(ts, fails);
  EXPECT_TRUE(fails(small));
  EXPECT_LE(small.tasks.size(), ts.tasks.size());
  Ticks before = 0, after = 0;
  for (const auto& t : ts.tasks) before += t.wcet;
  for (const auto& t : small.tasks) after += t.wcet;
  EXPECT_LT(after, before);
}

TEST(PropertyHelperTest, MinimizerLeavesPassingSetsAlone) {
  TaskSet ts = generate_taskset(3, 4, 2, 1, 0.5);
  EXPECT_EQ(minimize_counterexample(ts, [](const TaskSet&) { return false; }), ts);
}

TEST(PropertyHelperTest, BoundChecksOnHandSet) {
  TaskSet ts;
  ts.resources = {{"R", 1, {}}};
  ts.tasks = {cs_task(1, 10, 1, 0, "R", 1, 3, 1)};
  Trace tr = simulate(ts, params_for(SimProtocol::Mbs));
  EXPECT_TRUE(conservative_bound_violations(ts, tr).empty());
  EXPECT_TRUE(paper_bound_exceedances(ts, tr).empty());
}

TEST(FuzzTest, CasesAreDeterministicAndWithinLimits) {
  mbs::sim::FuzzConfig cfg;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto c = mbs::sim::draw_case(seed, cfg);
    auto again = mbs::sim::draw_case(seed, cfg);
    EXPECT_EQ(c.tasks, again.tasks);
    EXPECT_EQ(c.utilization, again.utilization);
    TaskSet ts = mbs::sim::build_case(c);
    EXPECT_LE(ts.tasks.size(), 6u);
    EXPECT_LE(ts.resources.size(), 2u);
    EXPECT_LE(ts.delta, 2);
    for (const auto& t : ts.tasks) EXPECT_LT(t.processor, 3);
    EXPECT_LE(ts.hyperperiod(), 1'000'000);
  }
  cfg.max_load = 1.5;
  EXPECT_THROW(mbs::sim::draw_case(0, cfg), mbs::ConfigError);
}

TEST(FuzzTest, ReportCountsSets) {
  mbs::sim::FuzzConfig cfg;
  cfg.count = 40;
  auto report = mbs::sim::run_soundness_fuzz(cfg);
  EXPECT_EQ(report.sets, 40);
  EXPECT_LE(report.analyzed_schedulable, 40);
  EXPECT_TRUE(report.conservative_violations.empty());
}
