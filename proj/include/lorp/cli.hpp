#pragma once

#include <iosfwd>

namespace lorp {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitAllFailed = 3 };

/// Entry point of `lorp`, writing results to `out` and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lorp
