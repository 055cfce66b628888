#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace obsest::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes shared by every command.
enum ExitCode : int {
  kOk = 0,
  kInvalidArguments = 2,
  kSolverFailure = 3,
  kVerificationFailure = 4,
};

/// Runs the command line `args` (without the program name). Data goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace obsest::cli
