#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gkmnc/error.hpp"

namespace gkmnc::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kDataError = 3,
  kTrainingError = 4,
  kIoError = 5,
};

int exit_code_for(ErrorCode code);

// args excludes the program name, e.g. {"train", "--data", "x.csv", ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gkmnc::cli
