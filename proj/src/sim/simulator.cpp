#include "mbs/sim/simulator.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "mbs/error.hpp"

namespace mbs::sim {

using analysis::Segment;
using analysis::TaskSpec;

namespace {

enum class JobState {
  Waiting,     // an earlier job of the same task is unfinished
  Ready,
  Running,
  Spinning,    // busy-waiting for a ticket lock, non-preemptive
  Requesting,  // asked for a mutex this instant, grant not yet decided
  Suspended,   // waiting for a mutex, core released
  MigratingOut,
  Queued,
  InSyncCs,
  MigratingBack,
  Done,
};

enum class CsPhase { None, Requested, Granted };

struct Job {
  int id = 0;
  const TaskSpec* task = nullptr;
  size_t task_index = 0;
  int index = 0;
  Ticks release = 0;
  size_t seg = 0;
  Ticks remaining = 0;
  JobState state = JobState::Ready;
  CsPhase phase = CsPhase::None;
  Ticks arrival = 0;
  std::uint64_t ticket = 0;
  size_t cs_record = 0;
};

struct AppCore {
  int current = -1;
  int reserved_by = -1;
  std::vector<size_t> tasks;
  CoreUsage usage;
};

struct SyncCoreSim {
  int serving = -1;
  std::vector<int> queue;
  CoreUsage usage;
};

struct LockSim {
  int owner = -1;
  std::vector<int> queue;  // ticket order
};

constexpr Ticks kNever = std::numeric_limits<Ticks>::max();

class Engine {
 public:
  Engine(TaskSet ts, const SimParams& params)
      : ts_(std::move(ts)), params_(params), cache_(params.cache) {
    delta_ = params.migration_cost.value_or(ts_.delta);
    if (delta_ < 0) throw ValidationError("migration cost must be non-negative");
    if (params.horizon <= 0) throw ValidationError("horizon must be positive");
    mbs_ = params.protocol == SimProtocol::Mbs || params.protocol == SimProtocol::MbsR;

    for (size_t i = 0; i < ts_.tasks.size(); ++i) cores_[ts_.tasks[i].processor].tasks.push_back(i);
    for (auto& [id, core] : cores_) core.usage.core = id;
    if (mbs_) {
      for (const auto& r : ts_.resources) {
        auto& s = syncs_[r.sync_core];
        s.usage.core = r.sync_core;
        s.usage.sync = true;
        if (params.cache.preload_sync_cores) cache_.preload(r.id, r.sync_core);
      }
    } else {
      for (const auto& r : ts_.resources) locks_[r.id];
    }

    Ticks hyper = ts_.hyperperiod();
    horizon_ = std::min(hyper, params.horizon);
    Ticks longest = 0;
    for (const auto& t : ts_.tasks) longest = std::max(longest, t.period);
    limit_ = horizon_ + longest;
    next_release_.assign(ts_.tasks.size(), 0);
    backlog_.resize(ts_.tasks.size());
    job_count_.assign(ts_.tasks.size(), 0);
  }

  Trace run() {
    tr_.release_horizon = horizon_;
    while (true) {
      complete();
      release();
      settle();
      if (now_ >= horizon_ && all_done()) break;
      Ticks next = next_event();
      if (next == kNever || now_ >= limit_) break;
      advance(std::min(next, limit_) - now_);
    }
    tr_.end_time = now_;
    for (auto& [id, c] : cores_) tr_.cores.push_back(c.usage);
    for (auto& [id, s] : syncs_) tr_.cores.push_back(s.usage);
    std::sort(tr_.cores.begin(), tr_.cores.end(),
              [](const CoreUsage& a, const CoreUsage& b) { return a.core < b.core; });
    return std::move(tr_);
  }

 private:
  const Segment& segment(const Job& j) const { return j.task->segments[j.seg]; }
  int sync_of(const Job& j) const { return ts_.resource(segment(j).resource).sync_core; }
  AppCore& home(const Job& j) { return cores_.at(j.task->processor); }

  void emit(EventKind kind, const Job& j, int core, std::string resource = {}) {
    tr_.events.push_back({now_, kind, j.task->id, core, j.index, std::move(resource)});
  }

  bool nonpreemptive(const Job& j) const {
    if (params_.protocol != SimProtocol::SpinFifo) return false;
    return j.state == JobState::Spinning ||
           (j.state == JobState::Running && segment(j).is_cs() && j.phase == CsPhase::Granted);
  }

  bool progressing(const Job& j) const {
    if (j.state == JobState::InSyncCs) return true;
    if (j.state != JobState::Running) return false;
    return !segment(j).is_cs() || j.phase == CsPhase::Granted;
  }

  bool all_done() const {
    for (const auto& b : backlog_)
      if (!b.empty()) return false;
    return true;
  }

  std::vector<int> active_jobs() const {
    std::vector<int> out;
    for (const auto& b : backlog_)
      if (!b.empty()) out.push_back(b.front());
    return out;
  }

  void enter_segment(Job& j) {
    j.phase = CsPhase::None;
    j.remaining = segment(j).is_cs() ? 0 : segment(j).duration;
  }

  // Current segment finished; returns false when the job is done.
  bool next_segment(Job& j) {
    ++j.seg;
    if (j.seg == j.task->segments.size()) {
      finish(j);
      return false;
    }
    enter_segment(j);
    return true;
  }

  void finish(Job& j) {
    emit(EventKind::Finish, j, j.task->processor);
    j.state = JobState::Done;
    tr_.jobs[j.id].finish = now_;
    AppCore& core = home(j);
    if (core.current == j.id) core.current = -1;
    auto& b = backlog_[j.task_index];
    b.erase(b.begin());
    if (!b.empty()) jobs_[b.front()].state = JobState::Ready;
  }

  void release() {
    if (now_ >= horizon_) return;
    for (size_t i = 0; i < ts_.tasks.size(); ++i) {
      if (next_release_[i] != now_) continue;
      const TaskSpec& t = ts_.tasks[i];
      Job j;
      j.id = static_cast<int>(jobs_.size());
      j.task = &t;
      j.task_index = i;
      j.index = job_count_[i]++;
      j.release = now_;
      j.state = backlog_[i].empty() ? JobState::Ready : JobState::Waiting;
      enter_segment(j);
      emit(EventKind::Release, j, t.processor);
      tr_.jobs.push_back({t.id, j.index, now_, std::nullopt});
      backlog_[i].push_back(j.id);
      jobs_.push_back(j);
      next_release_[i] += t.period;
    }
  }

  void arrive_at_sync(Job& j) {
    emit(EventKind::CsEnqueue, j, sync_of(j), segment(j).resource);
    j.state = JobState::Queued;
    pending_.push_back(j.id);
  }

  void arrive_home(Job& j) {
    emit(EventKind::MigrateBack, j, j.task->processor, segment(j).resource);
    AppCore& core = home(j);
    if (core.reserved_by == j.id) core.reserved_by = -1;
    if (next_segment(j)) j.state = JobState::Ready;
  }

  void complete() {
    std::vector<int> due;
    for (int id : active_jobs()) {
      const Job& j = jobs_[id];
      bool ready = false;
      if (progressing(j)) ready = j.remaining == 0;
      if (j.state == JobState::MigratingOut || j.state == JobState::MigratingBack)
        ready = j.arrival == now_;
      if (ready) due.push_back(id);
    }
    std::sort(due.begin(), due.end(),
              [&](int a, int b) { return jobs_[a].task->id < jobs_[b].task->id; });
    for (int id : due) {
      Job& j = jobs_[id];
      switch (j.state) {
        case JobState::Running:
          if (segment(j).is_cs()) {
            emit(EventKind::CsEnd, j, j.task->processor, segment(j).resource);
            tr_.critical_sections[j.cs_record].end = now_;
            locks_.at(segment(j).resource).owner = -1;
          }
          next_segment(j);
          break;
        case JobState::InSyncCs: {
          int s = sync_of(j);
          emit(EventKind::CsEnd, j, s, segment(j).resource);
          tr_.critical_sections[j.cs_record].end = now_;
          syncs_.at(s).serving = -1;
          j.state = JobState::MigratingBack;
          j.arrival = now_ + delta_;
          if (delta_ == 0) arrive_home(j);
          break;
        }
        case JobState::MigratingOut:
          arrive_at_sync(j);
          break;
        case JobState::MigratingBack:
          arrive_home(j);
          break;
        default:
          break;
      }
    }
  }

  void settle() {
    while (true) {
      bool changed = flush_pending();
      changed |= grant();
      changed |= suspend_blocked();
      changed |= dispatch();
      changed |= begin_requests();
      if (!changed) break;
    }
  }

  bool flush_pending() {
    if (pending_.empty()) return false;
    std::sort(pending_.begin(), pending_.end(),
              [&](int a, int b) { return jobs_[a].task->id < jobs_[b].task->id; });
    for (int id : pending_) {
      Job& j = jobs_[id];
      j.ticket = next_ticket_++;
      if (mbs_)
        syncs_.at(sync_of(j)).queue.push_back(id);
      else
        locks_.at(segment(j).resource).queue.push_back(id);
    }
    pending_.clear();
    return true;
  }

  void open_cs_record(Job& j, int core) {
    const std::string& r = segment(j).resource;
    emit(EventKind::CsStart, j, core, r);
    auto access = cache_.touch_all(r, core);
    j.remaining = segment(j).duration + access.cost;
    j.phase = CsPhase::Granted;
    j.cs_record = tr_.critical_sections.size();
    tr_.critical_sections.push_back({j.task->id, j.index, r, core, now_, -1, access.hits, access.misses});
  }

  bool grant() {
    bool changed = false;
    if (mbs_) {
      for (auto& [id, s] : syncs_) {
        if (s.serving != -1 || s.queue.empty()) continue;
        auto pick = s.queue.begin();
        if (params_.admission == Admission::Priority) {
          pick = std::min_element(s.queue.begin(), s.queue.end(), [&](int a, int b) {
            const Job& x = jobs_[a];
            const Job& y = jobs_[b];
            if (x.task->priority != y.task->priority) return x.task->priority > y.task->priority;
            return x.ticket < y.ticket;
          });
        }
        int jid = *pick;
        s.queue.erase(pick);
        s.serving = jid;
        Job& j = jobs_[jid];
        open_cs_record(j, id);
        j.state = JobState::InSyncCs;
        changed = true;
      }
      return changed;
    }
    for (auto& [r, lock] : locks_) {
      if (lock.owner != -1 || lock.queue.empty()) continue;
      int jid = lock.queue.front();
      lock.queue.erase(lock.queue.begin());
      lock.owner = jid;
      Job& j = jobs_[jid];
      open_cs_record(j, j.task->processor);
      j.state = j.state == JobState::Suspended ? JobState::Ready : JobState::Running;
      changed = true;
    }
    return changed;
  }

  bool suspend_blocked() {
    bool changed = false;
    for (int id : active_jobs()) {
      Job& j = jobs_[id];
      if (j.state != JobState::Requesting) continue;
      emit(EventKind::Preempt, j, j.task->processor);
      home(j).current = -1;
      j.state = JobState::Suspended;
      changed = true;
    }
    return changed;
  }

  bool dispatch() {
    bool changed = false;
    for (auto& [id, core] : cores_) {
      if (core.reserved_by != -1) continue;
      if (core.current != -1 && nonpreemptive(jobs_[core.current])) continue;
      int best = -1;
      for (size_t ti : core.tasks) {
        if (backlog_[ti].empty()) continue;
        const Job& j = jobs_[backlog_[ti].front()];
        bool candidate = j.state == JobState::Ready ||
                         (j.state == JobState::Running && core.current == j.id);
        if (candidate && (best == -1 || j.task->priority > jobs_[best].task->priority)) best = j.id;
      }
      if (best == core.current) continue;
      if (core.current != -1) {
        Job& cur = jobs_[core.current];
        emit(EventKind::Preempt, cur, id);
        cur.state = JobState::Ready;
      }
      core.current = best;
      if (best != -1) {
        emit(EventKind::Start, jobs_[best], id);
        jobs_[best].state = JobState::Running;
      }
      changed = true;
    }
    return changed;
  }

  bool begin_requests() {
    std::vector<int> starting;
    for (auto& [id, core] : cores_) {
      if (core.current == -1) continue;
      const Job& j = jobs_[core.current];
      if (j.state == JobState::Running && segment(j).is_cs() && j.phase == CsPhase::None)
        starting.push_back(j.id);
    }
    std::sort(starting.begin(), starting.end(),
              [&](int a, int b) { return jobs_[a].task->id < jobs_[b].task->id; });
    for (int id : starting) {
      Job& j = jobs_[id];
      AppCore& core = home(j);
      const std::string& r = segment(j).resource;
      j.phase = CsPhase::Requested;
      switch (params_.protocol) {
        case SimProtocol::Mbs:
        case SimProtocol::MbsR:
          emit(EventKind::MigrateOut, j, j.task->processor, r);
          core.current = -1;
          if (params_.protocol == SimProtocol::MbsR) core.reserved_by = j.id;
          j.state = JobState::MigratingOut;
          j.arrival = now_ + delta_;
          if (delta_ == 0) arrive_at_sync(j);
          break;
        case SimProtocol::SpinFifo:
          emit(EventKind::CsEnqueue, j, j.task->processor, r);
          j.state = JobState::Spinning;
          pending_.push_back(j.id);
          break;
        case SimProtocol::Mutex:
          emit(EventKind::CsEnqueue, j, j.task->processor, r);
          j.state = JobState::Requesting;
          pending_.push_back(j.id);
          break;
      }
    }
    return !starting.empty();
  }

  Ticks next_event() const {
    Ticks next = kNever;
    for (size_t i = 0; i < next_release_.size(); ++i)
      if (next_release_[i] < horizon_) next = std::min(next, next_release_[i]);
    for (int id : active_jobs()) {
      const Job& j = jobs_[id];
      if (progressing(j)) next = std::min(next, now_ + j.remaining);
      if (j.state == JobState::MigratingOut || j.state == JobState::MigratingBack)
        next = std::min(next, j.arrival);
    }
    return next;
  }

  void advance(Ticks dt) {
    for (auto& [id, core] : cores_) {
      if (core.current != -1) {
        core.usage.busy += dt;
        Job& j = jobs_[core.current];
        if (progressing(j)) j.remaining -= dt;
      } else if (core.reserved_by != -1) {
        core.usage.reserved += dt;
      } else {
        core.usage.idle += dt;
      }
    }
    for (auto& [id, s] : syncs_) {
      if (s.serving != -1) {
        s.usage.busy += dt;
        jobs_[s.serving].remaining -= dt;
      } else {
        s.usage.idle += dt;
      }
    }
    now_ += dt;
  }

  TaskSet ts_;
  SimParams params_;
  CacheModel cache_;
  Ticks delta_ = 0;
  bool mbs_ = false;
  Ticks horizon_ = 0;
  Ticks limit_ = 0;
  Ticks now_ = 0;
  std::uint64_t next_ticket_ = 0;
  std::vector<Job> jobs_;
  std::vector<std::vector<int>> backlog_;
  std::vector<int> job_count_;
  std::vector<Ticks> next_release_;
  std::vector<int> pending_;
  std::map<int, AppCore> cores_;
  std::map<int, SyncCoreSim> syncs_;
  std::map<std::string, LockSim> locks_;
  Trace tr_;
};

}  // namespace

std::string to_string(SimProtocol p) {
  switch (p) {
    case SimProtocol::Mbs: return "mbs";
    case SimProtocol::MbsR: return "mbs-r";
    case SimProtocol::SpinFifo: return "spin-fifo";
    case SimProtocol::Mutex: return "mutex";
  }
  return "?";
}

SimProtocol parse_sim_protocol(const std::string& name) {
  for (auto p : {SimProtocol::Mbs, SimProtocol::MbsR, SimProtocol::SpinFifo, SimProtocol::Mutex})
    if (to_string(p) == name) return p;
  throw ConfigError("unknown protocol '" + name + "' (expected mbs, mbs-r, spin-fifo or mutex)");
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::Release: return "Release";
    case EventKind::Start: return "Start";
    case EventKind::Preempt: return "Preempt";
    case EventKind::CsEnqueue: return "CsEnqueue";
    case EventKind::CsStart: return "CsStart";
    case EventKind::CsEnd: return "CsEnd";
    case EventKind::MigrateOut: return "MigrateOut";
    case EventKind::MigrateBack: return "MigrateBack";
    case EventKind::Finish: return "Finish";
  }
  return "?";
}

Trace simulate(const TaskSet& input, const SimParams& params) {
  analysis::validate(input);
  TaskSet ts = analysis::expand_group_locks(input);
  analysis::validate_flat(ts);
  return Engine(std::move(ts), params).run();
}

std::vector<ObservedResponse> observed_response_times(const Trace& tr) {
  std::map<int, ObservedResponse> by_task;
  for (const auto& j : tr.jobs) {
    auto& o = by_task[j.task];
    o.task = j.task;
    if (j.finish) {
      ++o.completed;
      o.max_response = std::max(o.max_response, *j.finish - j.release);
    } else {
      ++o.unfinished;
    }
  }
  std::vector<ObservedResponse> out;
  for (auto& [id, o] : by_task) out.push_back(o);
  return out;
}

std::vector<std::pair<std::string, int>> cs_service_sequence(const Trace& tr) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& cs : tr.critical_sections) out.emplace_back(cs.resource, cs.task);
  return out;
}

long steady_state_misses(const Trace& tr) {
  long misses = 0;
  for (const auto& cs : tr.critical_sections)
    if (cs.job > 0) misses += cs.misses;
  return misses;
}

}  // namespace mbs::sim
