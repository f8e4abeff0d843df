#include "mbs/sim/fuzz.hpp"

#include <random>

#include "mbs/analysis/response_time.hpp"
#include "mbs/error.hpp"
#include "mbs/sim/generator.hpp"

namespace mbs::sim {

FuzzCase draw_case(std::uint64_t seed, const FuzzConfig& cfg) {
  if (cfg.max_tasks < 1 || cfg.max_cores < 1 || cfg.max_resources < 0 || cfg.max_delta < 0 ||
      cfg.min_load <= 0 || cfg.max_load < cfg.min_load || cfg.max_load > 1)
    throw ConfigError("invalid fuzz limits");
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  FuzzCase c;
  c.seed = seed;
  c.cores = pick(1, cfg.max_cores);
  c.tasks = pick(std::min(c.cores, cfg.max_tasks), cfg.max_tasks);
  c.resources = pick(std::min(1, cfg.max_resources), cfg.max_resources);
  c.delta = pick(0, static_cast<int>(cfg.max_delta));
  double load = std::uniform_real_distribution<double>(cfg.min_load, cfg.max_load)(rng);
  c.utilization = load * std::min(c.cores, c.tasks);
  return c;
}

TaskSet build_case(const FuzzCase& c) {
  return generate_taskset(c.seed, c.tasks, c.cores, c.resources, c.utilization, c.delta);
}

FuzzReport run_soundness_fuzz(const FuzzConfig& cfg) {
  if (cfg.count < 1) throw ConfigError("fuzz count must be positive");
  FuzzReport report;
  for (int i = 0; i < cfg.count; ++i) {
    FuzzCase c = draw_case(cfg.seed + static_cast<std::uint64_t>(i), cfg);
    TaskSet ts = build_case(c);
    SimParams params;
    params.protocol = SimProtocol::Mbs;
    params.horizon = ts.hyperperiod();
    Trace tr = simulate(ts, params);
    ++report.sets;
    if (analysis::schedulability_test(ts, analysis::Protocol::MbsConservative).schedulable)
      ++report.analyzed_schedulable;
    for (const auto& e : conservative_bound_violations(ts, tr))
      report.conservative_violations.push_back({c, e});
    for (const auto& e : paper_bound_exceedances(ts, tr)) report.paper_exceedances.push_back({c, e});
  }
  return report;
}

}  // namespace mbs::sim
