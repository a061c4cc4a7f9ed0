#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ldpx::cli {

enum ExitCode : int { ok = 0, failure = 1, conditions_failed = 2 };

/// Parses `args` (without the program name) and runs one command.
/// Everything meant for the terminal goes to `out` / `err`; artifacts go to the output directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ldpx::cli
