#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace isgd::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kDivergence = 4,
};

/// Entry point shared by the `isgd` binary and the tests. `args` excludes
/// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isgd::cli
