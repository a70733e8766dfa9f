#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace lyacert::cli {

// Process exit codes. 0 and 1 are verdicts, everything >= 2 is a failure.
enum ExitCode : int {
  kOk = 0,
  kNotCertified = 1,
  kConfigError = 2,
  kIoError = 3,
  kNonFiniteLoss = 4,
  kDimensionMismatch = 5,
};

// Runs `lyacert <args...>` (args excludes the program name). `env` resolves
// environment variables; pass the process environment in production.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env);

EnvLookup process_env();

}  // namespace lyacert::cli
