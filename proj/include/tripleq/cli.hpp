#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tripleq::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kInfeasible = 3,
  kSolverFailure = 4,
};

/// Runs the command line `args` (args[0] is the program name). Subcommands:
/// run, baseline, env, compare.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tripleq::cli
