#include "mbs/analysis/task_model.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "mbs/error.hpp"

namespace mbs::analysis {

namespace {

std::string task_name(const TaskSpec& t) { return "task " + std::to_string(t.id); }

void check_segments(const TaskSpec& t, const std::vector<Segment>& segments, const TaskSet& ts,
                    bool allow_nesting) {
  for (const auto& s : segments) {
    if (s.duration <= 0 && !(s.is_cs() && !s.nested.empty() && s.duration == 0))
      throw ValidationError(task_name(t) + ": segment durations must be positive");
    if (s.is_cs()) {
      if (ts.find_resource(s.resource) == nullptr)
        throw ValidationError(task_name(t) + ": unknown resource '" + s.resource + "'");
      if (!s.nested.empty()) {
        if (!allow_nesting)
          throw ValidationError(task_name(t) + ": nested critical section on '" + s.resource +
                                "' is not supported here; use group locks");
        check_segments(t, s.nested, ts, allow_nesting);
      }
    } else if (!s.nested.empty()) {
      throw ValidationError(task_name(t) + ": execution segments cannot contain segments");
    }
  }
}

void validate_impl(const TaskSet& ts, bool allow_nesting) {
  if (ts.delta < 0) throw ValidationError("migration overhead must be non-negative");
  std::set<std::string> resource_ids;
  std::set<int> sync_cores;
  for (const auto& r : ts.resources) {
    if (r.id.empty()) throw ValidationError("resource with empty id");
    if (!resource_ids.insert(r.id).second)
      throw ValidationError("duplicate resource id '" + r.id + "'");
    if (r.sync_core < 0) throw ValidationError("resource '" + r.id + "': negative sync core");
    sync_cores.insert(r.sync_core);
  }
  std::set<int> ids;
  std::set<int> priorities;
  for (const auto& t : ts.tasks) {
    if (!ids.insert(t.id).second) throw ValidationError("duplicate task id " + std::to_string(t.id));
    if (!priorities.insert(t.priority).second)
      throw ValidationError(task_name(t) + ": priority " + std::to_string(t.priority) +
                            " is not unique");
    if (t.period <= 0) throw ValidationError(task_name(t) + ": period must be positive");
    if (t.wcet <= 0) throw ValidationError(task_name(t) + ": wcet must be positive");
    if (t.processor < 0) throw ValidationError(task_name(t) + ": negative processor");
    if (sync_cores.count(t.processor) != 0)
      throw ValidationError(task_name(t) + ": processor " + std::to_string(t.processor) +
                            " is also a synchronization core");
    if (t.segments.empty()) throw ValidationError(task_name(t) + ": no segments");
    check_segments(t, t.segments, ts, allow_nesting);
    Ticks sum = 0;
    for (const auto& s : t.segments) sum += s.total();
    if (sum != t.wcet)
      throw ValidationError(task_name(t) + ": segments sum to " + std::to_string(sum) +
                            " but wcet is " + std::to_string(t.wcet));
  }
}

// Collapses a critical section on `resource` whose nested segments are
// plain execution or further sections on the same resource.
bool collapsible(const Segment& s, const std::string& resource) {
  for (const auto& n : s.nested) {
    if (n.is_cs() && (n.resource != resource || !collapsible(n, resource))) return false;
  }
  return true;
}

Segment relabel(const Segment& s, const std::map<std::string, std::string>& to_group) {
  Segment out = s;
  if (out.is_cs()) {
    if (auto it = to_group.find(out.resource); it != to_group.end()) out.resource = it->second;
    for (auto& n : out.nested) n = relabel(n, to_group);
    if (!out.nested.empty() && collapsible(out, out.resource)) {
      out.duration = out.total();
      out.nested.clear();
    }
  }
  return out;
}

}  // namespace

Ticks Segment::total() const {
  Ticks sum = duration;
  for (const auto& n : nested) sum += n.total();
  return sum;
}

Ticks TaskSpec::local_execution() const {
  Ticks sum = 0;
  for (const auto& s : segments)
    if (!s.is_cs()) sum += s.duration;
  return sum;
}

std::vector<const Segment*> TaskSpec::critical_sections() const {
  std::vector<const Segment*> out;
  for (const auto& s : segments)
    if (s.is_cs()) out.push_back(&s);
  return out;
}

const TaskSpec& TaskSet::task(int id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  throw ValidationError("unknown task " + std::to_string(id));
}

const ResourceSpec* TaskSet::find_resource(const std::string& id) const {
  for (const auto& r : resources)
    if (r.id == id) return &r;
  return nullptr;
}

const ResourceSpec& TaskSet::resource(const std::string& id) const {
  if (const auto* r = find_resource(id)) return *r;
  throw ValidationError("unknown resource '" + id + "'");
}

std::vector<const TaskSpec*> TaskSet::by_priority() const {
  std::vector<const TaskSpec*> out;
  for (const auto& t : tasks) out.push_back(&t);
  std::sort(out.begin(), out.end(),
            [](const TaskSpec* a, const TaskSpec* b) { return a->priority > b->priority; });
  return out;
}

Ticks TaskSet::hyperperiod() const {
  if (tasks.empty()) return 0;
  Ticks h = 1;
  for (const auto& t : tasks) {
    Ticks g = std::gcd(h, t.period);
    Ticks factor = t.period / g;
    if (h > std::numeric_limits<Ticks>::max() / factor)
      throw ValidationError("hyperperiod overflows");
    h *= factor;
  }
  return h;
}

void validate(const TaskSet& ts) { validate_impl(ts, true); }

void validate_flat(const TaskSet& ts) { validate_impl(ts, false); }

TaskSet expand_group_locks(const TaskSet& ts) {
  std::map<std::string, std::string> to_group;
  std::map<std::string, int> group_core;
  std::vector<std::string> group_order;
  for (const auto& r : ts.resources) {
    if (!r.group) continue;
    to_group[r.id] = *r.group;
    if (group_core.emplace(*r.group, r.sync_core).second) group_order.push_back(*r.group);
  }
  if (to_group.empty()) return ts;

  TaskSet out;
  out.delta = ts.delta;
  std::set<std::string> emitted;
  for (const auto& r : ts.resources) {
    if (!r.group) {
      if (group_core.count(r.id) != 0)
        throw ValidationError("group '" + r.id + "' collides with an ungrouped resource id");
      out.resources.push_back(r);
    } else if (emitted.insert(*r.group).second) {
      out.resources.push_back({*r.group, group_core.at(*r.group), std::nullopt});
    }
  }
  for (const auto& t : ts.tasks) {
    TaskSpec copy = t;
    for (auto& s : copy.segments) s = relabel(s, to_group);
    out.tasks.push_back(std::move(copy));
  }
  return out;
}

}  // namespace mbs::analysis
