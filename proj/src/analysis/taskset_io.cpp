#include "mbs/analysis/taskset_io.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "mbs/error.hpp"

namespace mbs::analysis {

namespace {

std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return "";
  return " at line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

void expect_map(const YAML::Node& n, const std::string& what, std::set<std::string> allowed) {
  if (!n.IsMap()) throw ConfigError(what + " must be a mapping" + where(n));
  for (const auto& kv : n) {
    auto key = kv.first.as<std::string>();
    if (allowed.count(key) == 0)
      throw ConfigError("unknown key '" + key + "' in " + what + where(kv.first));
  }
}

template <class T>
T scalar(const YAML::Node& parent, const std::string& key, const std::string& what) {
  YAML::Node n = parent[key];
  if (!n) throw ConfigError(what + ": missing '" + key + "'" + where(parent));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(what + ": bad value for '" + key + "'" + where(n));
  }
}

std::vector<Segment> parse_segments(const YAML::Node& list, const std::string& what) {
  if (!list.IsSequence()) throw ConfigError(what + ": segments must be a list" + where(list));
  std::vector<Segment> out;
  for (const auto& n : list) {
    expect_map(n, what + " segment", {"type", "resource", "duration", "nested"});
    auto type = scalar<std::string>(n, "type", what);
    Ticks duration = scalar<Ticks>(n, "duration", what);
    if (type == "exec") {
      if (n["resource"] || n["nested"])
        throw ConfigError(what + ": exec segments take only a duration" + where(n));
      out.push_back(Segment::exec(duration));
    } else if (type == "cs") {
      std::vector<Segment> nested;
      if (n["nested"]) nested = parse_segments(n["nested"], what);
      out.push_back(Segment::cs(scalar<std::string>(n, "resource", what), duration, nested));
    } else {
      throw ConfigError(what + ": segment type must be exec or cs" + where(n["type"]));
    }
  }
  return out;
}

void emit_segments(YAML::Emitter& out, const std::vector<Segment>& segments) {
  out << YAML::BeginSeq;
  for (const auto& s : segments) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "type" << YAML::Value << (s.is_cs() ? "cs" : "exec");
    if (s.is_cs()) out << YAML::Key << "resource" << YAML::Value << s.resource;
    out << YAML::Key << "duration" << YAML::Value << s.duration;
    if (!s.nested.empty()) {
      out << YAML::Key << "nested" << YAML::Value;
      emit_segments(out, s.nested);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

}  // namespace

TaskSet parse_taskset(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed task set: ") + e.what());
  }
  TaskSet ts;
  if (root.IsNull()) return ts;
  expect_map(root, "task set", {"params", "resources", "tasks"});

  if (auto p = root["params"]) {
    expect_map(p, "params", {"delta"});
    if (p["delta"]) ts.delta = scalar<Ticks>(p, "delta", "params");
  }
  if (auto rs = root["resources"]) {
    if (!rs.IsSequence()) throw ConfigError("resources must be a list" + where(rs));
    for (const auto& n : rs) {
      expect_map(n, "resource", {"id", "sync_core", "group"});
      ResourceSpec r;
      r.id = scalar<std::string>(n, "id", "resource");
      r.sync_core = scalar<int>(n, "sync_core", "resource '" + r.id + "'");
      if (n["group"]) r.group = scalar<std::string>(n, "group", "resource '" + r.id + "'");
      ts.resources.push_back(r);
    }
  }
  if (auto tasks = root["tasks"]) {
    if (!tasks.IsSequence()) throw ConfigError("tasks must be a list" + where(tasks));
    for (const auto& n : tasks) {
      expect_map(n, "task", {"id", "period", "wcet", "priority", "processor", "segments"});
      TaskSpec t;
      t.id = scalar<int>(n, "id", "task");
      std::string what = "task " + std::to_string(t.id);
      t.period = scalar<Ticks>(n, "period", what);
      t.wcet = scalar<Ticks>(n, "wcet", what);
      t.priority = scalar<int>(n, "priority", what);
      t.processor = scalar<int>(n, "processor", what);
      if (n["segments"])
        t.segments = parse_segments(n["segments"], what);
      else
        t.segments = {Segment::exec(t.wcet)};
      ts.tasks.push_back(std::move(t));
    }
  }
  return ts;
}

TaskSet load_taskset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open task set '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_taskset(buf.str());
}

std::string dump_taskset(const TaskSet& ts) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "params" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
      << "delta" << YAML::Value << ts.delta << YAML::EndMap;
  out << YAML::Key << "resources" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : ts.resources) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << r.id << YAML::Key
        << "sync_core" << YAML::Value << r.sync_core;
    if (r.group) out << YAML::Key << "group" << YAML::Value << *r.group;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : ts.tasks) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << t.id;
    out << YAML::Key << "period" << YAML::Value << t.period;
    out << YAML::Key << "wcet" << YAML::Value << t.wcet;
    out << YAML::Key << "priority" << YAML::Value << t.priority;
    out << YAML::Key << "processor" << YAML::Value << t.processor;
    out << YAML::Key << "segments" << YAML::Value;
    emit_segments(out, t.segments);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace mbs::analysis
