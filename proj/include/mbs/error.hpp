#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace mbs {

// Caller broke an API contract (re-lock by the holder, unlock without
// holding, use after shutdown, nesting order violation).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A configuration value is out of range (unknown core, bad buffer size).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The operating system refused something we need (affinity, threads).
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A facility is not available on this platform (hardware counters).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A task set or simulator configuration is inconsistent.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by every lock attempt on a mutex whose critical section failed.
class PoisonedError : public std::runtime_error {
 public:
  PoisonedError(const std::string& what, std::exception_ptr cause)
      : std::runtime_error(what), cause_(std::move(cause)) {}

  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  std::exception_ptr cause_;
};

}  // namespace mbs
