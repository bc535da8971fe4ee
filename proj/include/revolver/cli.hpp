#pragma once

#include <string>
#include <vector>

namespace revolver::cli {

enum ExitCode : int {
  kOk = 0,
  kFlagError = 2,
  kDataError = 3,
  kLevelExhausted = 4,
};

/// Parses and runs one command. args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace revolver::cli
