#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mbs::analysis {

/// Integer time ticks; all analysis and simulation arithmetic is exact.
using Ticks = std::int64_t;

/// One piece of a job: plain execution or a critical section on a resource.
/// A critical section may contain further segments (nested locking); its
/// total length is its own duration plus the nested totals.
struct Segment {
  enum class Kind { Exec, Cs };

  Kind kind = Kind::Exec;
  std::string resource;  // Cs only
  Ticks duration = 0;
  std::vector<Segment> nested;  // Cs only

  static Segment exec(Ticks duration) { return {Kind::Exec, {}, duration, {}}; }
  static Segment cs(std::string resource, Ticks duration, std::vector<Segment> nested = {}) {
    return {Kind::Cs, std::move(resource), duration, std::move(nested)};
  }

  bool is_cs() const { return kind == Kind::Cs; }
  Ticks total() const;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Periodic task with an implicit deadline equal to its period.
/// Larger priority values are more urgent; priorities are unique.
struct TaskSpec {
  int id = 0;
  Ticks period = 0;
  Ticks wcet = 0;
  int priority = 0;
  int processor = 0;
  std::vector<Segment> segments;

  /// Sum of top-level Exec segments: the part that runs on the own core
  /// under migration-based protocols.
  Ticks local_execution() const;
  /// Top-level critical sections in program order.
  std::vector<const Segment*> critical_sections() const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct ResourceSpec {
  std::string id;
  int sync_core = 0;
  std::optional<std::string> group;

  friend bool operator==(const ResourceSpec&, const ResourceSpec&) = default;
};

struct TaskSet {
  std::vector<TaskSpec> tasks;
  std::vector<ResourceSpec> resources;
  Ticks delta = 0;  // migration overhead per direction

  const TaskSpec& task(int id) const;
  const ResourceSpec& resource(const std::string& id) const;
  const ResourceSpec* find_resource(const std::string& id) const;
  /// Tasks ordered from most to least urgent.
  std::vector<const TaskSpec*> by_priority() const;
  /// Least common multiple of all periods (0 for an empty set). Throws
  /// ValidationError on overflow.
  Ticks hyperperiod() const;

  friend bool operator==(const TaskSet&, const TaskSet&) = default;
};

/// Checks structural invariants and throws ValidationError on the first
/// violation: unique ids and priorities, positive periods and durations,
/// segment totals equal to wcet, known resources, application processors
/// disjoint from synchronization cores.
void validate(const TaskSet& ts);

/// validate() plus: no nested critical sections remain.
void validate_flat(const TaskSet& ts);

/// Merges every resource group into one resource named after the group,
/// relabels critical sections, and collapses nesting among members of the
/// same group into a single critical section of the combined length.
TaskSet expand_group_locks(const TaskSet& ts);

}  // namespace mbs::analysis
