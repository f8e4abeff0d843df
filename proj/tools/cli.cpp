#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>

#include "mbs/analysis/response_time.hpp"
#include "mbs/analysis/taskset_io.hpp"
#include "mbs/bench/bench.hpp"
#include "mbs/bench/stats.hpp"
#include "mbs/error.hpp"
#include "mbs/sim/fuzz.hpp"
#include "mbs/sim/report.hpp"
#include "mbs/sim/simulator.hpp"

namespace mbs::cli {

namespace {

// Plain bytes, or with a K/M suffix (binary multiples).
std::size_t parse_size(const std::string& text) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid size '" + text + "'");
  }
  std::string suffix = text.substr(used);
  if (suffix == "K" || suffix == "k" || suffix == "KiB") value <<= 10;
  else if (suffix == "M" || suffix == "m" || suffix == "MiB") value <<= 20;
  else if (!suffix.empty()) throw ConfigError("invalid size suffix in '" + text + "'");
  return static_cast<std::size_t>(value);
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ConfigError("cannot open '" + path + "' for writing");
    stream_ = file_.get();
  }
  std::ostream& operator*() { return *stream_; }
  bool is_file() const { return file_ != nullptr; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void stats_table(std::ostream& os, const bench::BenchResult& r) {
  os << "field    count        min        p50        p99        max         mean       stddev\n";
  for (auto [name, field] : {std::pair{"cycle_ns", bench::Field::Cycle}, {"cs_ns", bench::Field::Cs}}) {
    auto s = bench::compute_stats(r.all_samples(), field);
    os << std::left << std::setw(8) << name << std::right << std::setw(6) << s.count
       << std::setw(11) << s.min << std::setw(11) << s.p50 << std::setw(11) << s.p99
       << std::setw(11) << s.max << std::fixed << std::setprecision(1) << std::setw(13) << s.mean
       << std::setw(13) << s.stddev << '\n';
  }
}

sim::Admission parse_admission(const std::string& name) {
  if (name == "priority") return sim::Admission::Priority;
  if (name == "fifo") return sim::Admission::Fifo;
  throw ConfigError("unknown admission '" + name + "' (expected priority or fifo)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Migration-based synchronization toolkit", "mbs"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run the cache-locality microbenchmark");
  std::string variant = "mbs", lambda = "32K", sigma = "8K", bench_out, stats_out;
  std::string counter_event = "cache-references";
  int threads = 0;
  long cycles = 1000;
  std::optional<int> sync_core;
  std::size_t line_bytes = 64;
  bool counters = false, keep_warmup = false, strict_cores = false;
  bench_cmd->add_option("--variant", variant, "mbs, mbs-r, spinlock or mutex")->capture_default_str();
  bench_cmd->add_option("--threads", threads, "Application threads (0: variant default)");
  bench_cmd->add_option("--cycles", cycles, "Measured cycles per thread")->capture_default_str();
  bench_cmd->add_option("--lambda", lambda, "Private buffer size per thread")->capture_default_str();
  bench_cmd->add_option("--sigma", sigma, "Shared buffer size")->capture_default_str();
  bench_cmd->add_option("--sync-core", sync_core, "Synchronization core (default: MBS_SYNC_CORES or last CPU)");
  bench_cmd->add_option("--line-bytes", line_bytes, "Cache line size")->capture_default_str();
  bench_cmd->add_flag("--counters", counters, "Read a hardware counter around each critical section");
  bench_cmd->add_option("--counter-event", counter_event, "Counter event name or raw:<hex>")
      ->capture_default_str();
  bench_cmd->add_flag("--keep-warmup", keep_warmup, "Also report warmup cycles");
  bench_cmd->add_flag("--strict-cores", strict_cores, "Fail when threads would share a core");
  bench_cmd->add_option("-o,--output", bench_out, "Samples CSV (default stdout)");
  bench_cmd->add_option("--stats", stats_out, "Statistics table (default stderr, or stdout with -o)");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Response-time analysis of a task set");
  std::string taskset_path, analyze_out;
  std::vector<std::string> protocols;
  analyze_cmd->add_option("--taskset", taskset_path, "Task-set YAML file")->required();
  analyze_cmd->add_option("--protocol", protocols,
                          "mbs-paper, mbs-conservative, mbs-r or spin-fifo (repeatable; default all)");
  analyze_cmd->add_option("-o,--output", analyze_out, "Results CSV (default stdout)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Discrete-event simulation of a task set");
  std::string sim_taskset, sim_protocol = "mbs", admission = "priority", trace_out, summary_out;
  std::optional<long long> delta, horizon;
  int lines = 0, l1_lines = 768;
  long long hit_cost = 0, miss_cost = 0;
  bool preload = false;
  sim_cmd->add_option("--taskset", sim_taskset, "Task-set YAML file")->required();
  sim_cmd->add_option("--protocol", sim_protocol, "mbs, mbs-r, spin-fifo or mutex")->capture_default_str();
  sim_cmd->add_option("--admission", admission, "priority or fifo")->capture_default_str();
  sim_cmd->add_option("--delta", delta, "Migration cost (default: task set)");
  sim_cmd->add_option("--horizon", horizon, "Release horizon (default: hyperperiod)");
  sim_cmd->add_option("--lines", lines, "Cache lines per resource")->capture_default_str();
  sim_cmd->add_option("--hit-cost", hit_cost)->capture_default_str();
  sim_cmd->add_option("--miss-cost", miss_cost)->capture_default_str();
  sim_cmd->add_option("--l1-lines", l1_lines, "Per-core cache capacity in lines")->capture_default_str();
  sim_cmd->add_flag("--preload", preload, "Resource lines start on their synchronization core");
  sim_cmd->add_option("--trace", trace_out, "Event trace CSV");
  sim_cmd->add_option("--summary", summary_out, "Summary CSV (default stdout)");

  // soundness-fuzz
  auto* fuzz_cmd = app.add_subcommand("soundness-fuzz", "Compare simulated MBS against analysis bounds");
  sim::FuzzConfig fuzz;
  std::string findings_out;
  fuzz_cmd->add_option("--count", fuzz.count, "Task sets")->capture_default_str();
  fuzz_cmd->add_option("--seed", fuzz.seed, "First seed")->capture_default_str();
  fuzz_cmd->add_option("--max-tasks", fuzz.max_tasks)->capture_default_str();
  fuzz_cmd->add_option("--max-cores", fuzz.max_cores)->capture_default_str();
  fuzz_cmd->add_option("--max-resources", fuzz.max_resources)->capture_default_str();
  fuzz_cmd->add_option("--max-delta", fuzz.max_delta)->capture_default_str();
  fuzz_cmd->add_option("--findings", findings_out, "CSV of every bound exceedance");

  std::vector<std::string> argv_store{"mbs"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return UsageFailure;
  }

  try {
    if (*bench_cmd) {
      bench::BenchConfig cfg;
      cfg.variant = bench::parse_variant(variant);
      cfg.threads = threads;
      cfg.cycles = cycles;
      cfg.lambda_bytes = parse_size(lambda);
      cfg.sigma_bytes = parse_size(sigma);
      cfg.sync_core = sync_core;
      cfg.cache_line_bytes = line_bytes;
      cfg.counters_enabled = counters;
      cfg.counter_event = counter_event;
      cfg.keep_warmup = keep_warmup;
      cfg.strict_cores = strict_cores;
      auto result = bench::run_benchmark(cfg);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      Sink samples(bench_out, out);
      bench::write_samples_csv(*samples, result);
      Sink table(stats_out, samples.is_file() ? out : err);
      stats_table(*table, result);
      return Ok;
    }

    if (*analyze_cmd) {
      analysis::TaskSet ts = analysis::load_taskset(taskset_path);
      if (protocols.empty()) protocols = {"mbs-paper", "mbs-conservative", "mbs-r", "spin-fifo"};
      std::vector<analysis::Protocol> parsed;
      for (const auto& p : protocols) parsed.push_back(analysis::parse_protocol(p));
      Sink sink(analyze_out, out);
      *sink << "protocol,task,priority,period,r,b_local,b_remote,iterations,schedulable\n";
      for (auto p : parsed) {
        auto report = analysis::schedulability_test(ts, p);
        for (const auto& r : report.results) {
          const auto& t = ts.task(r.task_id);
          *sink << analysis::to_string(p) << ',' << r.task_id << ',' << t.priority << ',' << t.period
                << ',' << r.r << ',' << r.b_local << ',' << r.b_remote << ',' << r.iterations << ','
                << (r.schedulable ? "yes" : "no") << '\n';
        }
      }
      return Ok;
    }

    if (*sim_cmd) {
      analysis::TaskSet ts = analysis::load_taskset(sim_taskset);
      sim::SimParams params;
      params.protocol = sim::parse_sim_protocol(sim_protocol);
      params.admission = parse_admission(admission);
      params.migration_cost = delta;
      params.horizon = horizon ? *horizon : ts.hyperperiod();
      params.cache.default_lines = lines;
      params.cache.hit_cost = hit_cost;
      params.cache.miss_cost = miss_cost;
      params.cache.l1_capacity_lines = l1_lines;
      params.cache.preload_sync_cores = preload;
      sim::Trace tr = sim::simulate(ts, params);
      if (!trace_out.empty()) {
        Sink trace(trace_out, out);
        sim::write_trace_csv(*trace, tr);
      }
      Sink summary(summary_out, out);
      sim::write_summary_csv(*summary, ts, tr);
      return Ok;
    }

    if (*fuzz_cmd) {
      auto report = sim::run_soundness_fuzz(fuzz);
      out << "sets " << report.sets << ", analyzable " << report.analyzed_schedulable
          << ", conservative violations " << report.conservative_violations.size()
          << ", paper-bound exceedances " << report.paper_exceedances.size() << '\n';
      if (!findings_out.empty()) {
        Sink sink(findings_out, out);
        *sink << "bound,seed,tasks,cores,resources,utilization,delta,task,observed,reference\n";
        auto dump = [&](const char* bound, const std::vector<sim::FuzzFinding>& list) {
          for (const auto& f : list)
            *sink << bound << ',' << f.where.seed << ',' << f.where.tasks << ',' << f.where.cores
                  << ',' << f.where.resources << ',' << f.where.utilization << ',' << f.where.delta
                  << ',' << f.excess.task << ',' << f.excess.observed << ',' << f.excess.reference
                  << '\n';
        };
        dump("conservative", report.conservative_violations);
        dump("paper", report.paper_exceedances);
      }
      return report.conservative_violations.empty() ? Ok : PropertyViolation;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return UsageFailure;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return UsageFailure;
  } catch (const EnvironmentError& e) {
    err << "error: " << e.what() << '\n';
    return EnvironmentFailure;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return UsageFailure;
  }
  return UsageFailure;
}

}  // namespace mbs::cli
