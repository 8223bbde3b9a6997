#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace curate::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
  kNonConvergence = 3,
};

// Runs one command line (args excludes the program name). Data goes to `out`
// or to the files named on the command line; progress and errors go to `err`
// as key=value lines.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curate::cli
