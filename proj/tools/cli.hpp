#pragma once

#include <iosfwd>

namespace vje::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kConfigError = 2,
  kNumericError = 3,
  kPartial = 4,
};

// Entry point of the vje binary, split out so tests can drive it in-process.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace vje::cli
