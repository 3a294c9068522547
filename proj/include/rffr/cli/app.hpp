#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rffr::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissing = 3,
  kExitNumeric = 4,
};

/// Parses arguments (without the program name) and runs one command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rffr::cli
