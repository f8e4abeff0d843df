#pragma once

#include <list>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mbs/analysis/task_model.hpp"

namespace mbs::sim {

using analysis::Ticks;

struct CacheParams {
  int default_lines = 0;                     // lines per resource unless overridden
  std::map<std::string, int> line_count;     // per-resource override
  Ticks hit_cost = 0;
  Ticks miss_cost = 0;
  int l1_capacity_lines = 768;
  bool preload_sync_cores = false;  // MBS protocols start with lines resident on their sync core
};

// Single-writer ownership model: a line is a hit only if the accessing core
// owns it and it is still in that core's LRU set. A miss transfers
// ownership and evicts the core's least recently used line when full.
class CacheModel {
 public:
  struct Access {
    int hits = 0;
    int misses = 0;
    Ticks cost = 0;
  };

  explicit CacheModel(CacheParams params);

  int lines_of(const std::string& resource) const;
  Access touch_all(const std::string& resource, int core);
  void preload(const std::string& resource, int core);

  int owner(const std::string& resource, int line) const;
  int resident_count(int core) const;

 private:
  using Line = std::pair<std::string, int>;
  struct Resident {
    std::list<Line> lru;  // most recent first
    std::map<Line, std::list<Line>::iterator> index;
  };

  bool access(const Line& line, int core);
  void drop(const Line& line, int core);

  CacheParams params_;
  std::map<Line, int> owner_;
  std::map<int, Resident> cores_;
};

}  // namespace mbs::sim
