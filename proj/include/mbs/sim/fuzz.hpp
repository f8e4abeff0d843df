#pragma once

#include <cstdint>
#include <vector>

#include "mbs/sim/properties.hpp"

namespace mbs::sim {

struct FuzzConfig {
  int count = 1000;
  std::uint64_t seed = 0;  // first seed; set i uses seed + i
  int max_tasks = 6;
  int max_cores = 3;
  int max_resources = 2;
  Ticks max_delta = 2;
  double min_load = 0.2;  // per-core utilization range
  double max_load = 0.9;
};

/// Shape of one generated set, drawn deterministically from its seed.
struct FuzzCase {
  std::uint64_t seed = 0;
  int tasks = 0;
  int cores = 0;
  int resources = 0;
  double utilization = 0;
  Ticks delta = 0;
};

FuzzCase draw_case(std::uint64_t seed, const FuzzConfig& cfg);
TaskSet build_case(const FuzzCase& c);

struct FuzzFinding {
  FuzzCase where;
  ResponseExcess excess;
};

struct FuzzReport {
  int sets = 0;
  int analyzed_schedulable = 0;
  std::vector<FuzzFinding> conservative_violations;
  std::vector<FuzzFinding> paper_exceedances;
};

/// Simulates every set under MBS to its hyperperiod and compares the
/// observed response times with both analysis bounds.
FuzzReport run_soundness_fuzz(const FuzzConfig& cfg);

}  // namespace mbs::sim
