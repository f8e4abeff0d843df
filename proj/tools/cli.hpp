#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mbs::cli {

enum ExitCode { Ok = 0, PropertyViolation = 1, UsageFailure = 2, EnvironmentFailure = 3 };

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mbs::cli
