#include "mbs/sim/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mbs/error.hpp"

namespace mbs::sim {

using analysis::Segment;
using analysis::TaskSet;
using analysis::TaskSpec;
using analysis::Ticks;

namespace {

constexpr Ticks kPeriods[] = {100, 200, 250, 400, 500, 1000, 2000, 2500, 5000, 10000};

std::vector<double> uunifast_discard(std::mt19937_64& rng, int n, double total) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> u(n);
    double sum = total;
    for (int i = 0; i < n - 1; ++i) {
      double next = sum * std::pow(unit(rng), 1.0 / (n - i - 1));
      u[i] = sum - next;
      sum = next;
    }
    u[n - 1] = sum;
    if (std::all_of(u.begin(), u.end(), [](double x) { return x <= 1.0; })) return u;
  }
  throw ValidationError("utilization target cannot be split into tasks of utilization <= 1");
}

// Splits `total` into `parts` positive integers.
std::vector<Ticks> split(std::mt19937_64& rng, Ticks total, int parts) {
  if (parts == 1) return {total};
  std::vector<Ticks> cuts;
  std::uniform_int_distribution<Ticks> pick(1, total - 1);
  while (static_cast<int>(cuts.size()) < parts - 1) {
    Ticks c = pick(rng);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<Ticks> out;
  Ticks prev = 0;
  for (Ticks c : cuts) {
    out.push_back(c - prev);
    prev = c;
  }
  out.push_back(total - prev);
  return out;
}

}  // namespace

TaskSet generate_taskset(std::uint64_t seed, int n_tasks, int n_cores, int n_resources,
                         double utilization, Ticks delta) {
  if (n_tasks <= 0) throw ValidationError("need at least one task");
  if (n_cores <= 0) throw ValidationError("need at least one core");
  if (n_resources < 0) throw ValidationError("resource count must be non-negative");
  if (!(utilization > 0.0) || utilization > n_cores || utilization > n_tasks)
    throw ValidationError("utilization target must lie in (0, min(cores, tasks)]");
  if (delta < 0) throw ValidationError("migration overhead must be non-negative");

  std::mt19937_64 rng(seed);
  auto u = uunifast_discard(rng, n_tasks, utilization);

  TaskSet ts;
  ts.delta = delta;
  for (int k = 0; k < n_resources; ++k)
    ts.resources.push_back({"R" + std::to_string(k), n_cores + k, std::nullopt});

  std::uniform_int_distribution<size_t> period_pick(0, std::size(kPeriods) - 1);
  std::uniform_int_distribution<int> cs_count(0, 2);
  std::uniform_int_distribution<int> resource_pick(0, std::max(0, n_resources - 1));
  for (int i = 0; i < n_tasks; ++i) {
    TaskSpec t;
    t.id = i + 1;
    t.period = kPeriods[period_pick(rng)];
    t.wcet = std::max<Ticks>(1, std::llround(u[i] * static_cast<double>(t.period)));
    int sections = n_resources == 0 ? 0 : cs_count(rng);
    Ticks cs_max = t.wcet / 5;
    if (cs_max == 0) sections = 0;
    std::vector<Ticks> cs;
    for (int c = 0; c < sections; ++c)
      cs.push_back(std::uniform_int_distribution<Ticks>(1, cs_max)(rng));
    Ticks local = t.wcet - std::accumulate(cs.begin(), cs.end(), Ticks{0});
    auto pieces = split(rng, local, sections + 1);
    for (int c = 0; c < sections; ++c) {
      t.segments.push_back(Segment::exec(pieces[c]));
      t.segments.push_back(Segment::cs("R" + std::to_string(resource_pick(rng)), cs[c]));
    }
    t.segments.push_back(Segment::exec(pieces[sections]));
    ts.tasks.push_back(std::move(t));
  }

  // Worst-fit placement by utilization, largest first.
  std::vector<int> order(n_tasks);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u[a] > u[b]; });
  std::vector<double> load(n_cores, 0.0);
  for (int i : order) {
    int core = static_cast<int>(std::min_element(load.begin(), load.end()) - load.begin());
    ts.tasks[i].processor = core;
    load[core] += u[i];
  }

  // Rate monotonic, ties by id.
  std::vector<int> rank(n_tasks);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](int a, int b) { return ts.tasks[a].period < ts.tasks[b].period; });
  for (int pos = 0; pos < n_tasks; ++pos) ts.tasks[rank[pos]].priority = n_tasks - pos;
  return ts;
}

}  // namespace mbs::sim
