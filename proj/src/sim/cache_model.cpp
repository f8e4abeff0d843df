#include "mbs/sim/cache_model.hpp"

#include "mbs/error.hpp"

namespace mbs::sim {

CacheModel::CacheModel(CacheParams params) : params_(std::move(params)) {
  if (params_.hit_cost < 0 || params_.hit_cost > params_.miss_cost)
    throw ValidationError("cache costs must satisfy 0 <= hit_cost <= miss_cost");
  if (params_.l1_capacity_lines <= 0) throw ValidationError("L1 capacity must be positive");
  if (params_.default_lines < 0) throw ValidationError("line count must be non-negative");
  for (const auto& [r, n] : params_.line_count)
    if (n < 0) throw ValidationError("line count of '" + r + "' must be non-negative");
}

int CacheModel::lines_of(const std::string& resource) const {
  auto it = params_.line_count.find(resource);
  return it == params_.line_count.end() ? params_.default_lines : it->second;
}

void CacheModel::drop(const Line& line, int core) {
  auto& res = cores_[core];
  if (auto it = res.index.find(line); it != res.index.end()) {
    res.lru.erase(it->second);
    res.index.erase(it);
  }
}

bool CacheModel::access(const Line& line, int core) {
  auto& res = cores_[core];
  auto own = owner_.find(line);
  bool owned = own != owner_.end() && own->second == core;
  if (auto it = res.index.find(line); owned && it != res.index.end()) {
    res.lru.splice(res.lru.begin(), res.lru, it->second);
    return true;
  }
  if (own != owner_.end() && own->second != core) drop(line, own->second);
  owner_[line] = core;
  res.lru.push_front(line);
  res.index[line] = res.lru.begin();
  if (static_cast<int>(res.lru.size()) > params_.l1_capacity_lines) {
    Line victim = res.lru.back();
    res.index.erase(victim);
    res.lru.pop_back();
  }
  return false;
}

CacheModel::Access CacheModel::touch_all(const std::string& resource, int core) {
  Access a;
  for (int i = 0, n = lines_of(resource); i < n; ++i) {
    if (access({resource, i}, core)) {
      ++a.hits;
      a.cost += params_.hit_cost;
    } else {
      ++a.misses;
      a.cost += params_.miss_cost;
    }
  }
  return a;
}

void CacheModel::preload(const std::string& resource, int core) { touch_all(resource, core); }

int CacheModel::owner(const std::string& resource, int line) const {
  auto it = owner_.find({resource, line});
  return it == owner_.end() ? -1 : it->second;
}

int CacheModel::resident_count(int core) const {
  auto it = cores_.find(core);
  return it == cores_.end() ? 0 : static_cast<int>(it->second.lru.size());
}

}  // namespace mbs::sim
