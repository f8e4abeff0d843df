#pragma once

#include <string>

#include "mbs/analysis/task_model.hpp"

namespace mbs::analysis {

// YAML task-set files:
//
//   params: {delta: 1}
//   resources:
//     - {id: R, sync_core: 3, group: g}
//   tasks:
//     - id: 1
//       period: 10
//       wcet: 4
//       priority: 2
//       processor: 0
//       segments:
//         - {type: exec, duration: 1}
//         - {type: cs, resource: R, duration: 2, nested: [...]}
//         - {type: exec, duration: 1}
//
// `params`, `resources`, `segments`, `group` and `nested` are optional; a
// task without segments is one execution segment of length wcet. Unknown
// keys and malformed values raise ConfigError with the line and column.
// The result is not validated; call validate().
TaskSet parse_taskset(const std::string& text);
TaskSet load_taskset(const std::string& path);

std::string dump_taskset(const TaskSet& ts);

}  // namespace mbs::analysis
