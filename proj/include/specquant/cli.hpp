#pragma once

#include <string>
#include <vector>

namespace specquant::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  ///< runtime error, or solver failure rate above 20%
  kUsage = 2,    ///< bad flags, config, model file or input CSV
};

/// Runs one invocation; args[0] is the program name.
int run(const std::vector<std::string>& args);

std::string version();

}  // namespace specquant::cli
