#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mbs/analysis/blocking.hpp"
#include "mbs/analysis/task_model.hpp"

namespace mbs::analysis {

enum class Protocol {
  MbsPaper,         // per-CS bound, recurrence as stated
  MbsConservative,  // windowed bound, outer fixed point, jitter from response times
  MbsReservation,   // conservative MBS+R: reserved cores count as local demand
  SpinFifo,         // non-preemptive FIFO spinlocks
};

std::string to_string(Protocol p);
/// Accepts mbs-paper, mbs-conservative, mbs-r, spin-fifo. Throws ConfigError.
Protocol parse_protocol(const std::string& name);

struct ResponseTimeResult {
  int task_id = 0;
  Ticks r = 0;
  Ticks b_local = 0;
  Ticks b_remote = 0;
  int iterations = 0;
  bool schedulable = false;

  friend bool operator==(const ResponseTimeResult&, const ResponseTimeResult&) = default;
};

/// Blocking terms of a task for a given analysis window.
using BlockingFn = std::function<Blocking(const TaskSpec&, const TaskSet&, Ticks window)>;

/// Least fixed point of
///   r = e + b_local + b_remote + sum_h ceil((r + b_remote_h) / p_h) * e_h
/// over higher-priority tasks h on the same processor, starting from
/// r = e + b_local + b_remote. Blocking terms (including those of h) are
/// re-evaluated with window = current r. Stops at the fixed point or at the
/// first iterate above the period.
ResponseTimeResult response_time(const TaskSpec& t, const TaskSet& ts, const BlockingFn& bounds);

ResponseTimeResult response_time(const TaskSpec& t, const TaskSet& ts, Protocol protocol);

struct SchedulabilityReport {
  Protocol protocol = Protocol::MbsPaper;
  std::vector<ResponseTimeResult> results;  // most urgent first
  bool schedulable = true;
};

/// Expands group locks, validates, and analyzes every task.
SchedulabilityReport schedulability_test(const TaskSet& ts, Protocol protocol);

}  // namespace mbs::analysis
