#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace katlas::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kResourceCap = 3 };

/// Runs one command line (args exclude the program name). Never throws.
int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

} // namespace katlas::cli
