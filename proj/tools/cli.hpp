#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sinceeg::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kDataMismatch = 3,
    kCorruptArtifact = 4,
};

/// Runs one command. `args` excludes the program name. Human-readable output
/// goes to `out`, warnings and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sinceeg::cli
