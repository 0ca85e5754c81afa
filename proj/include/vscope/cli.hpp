#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vscope {

/// Exit statuses of the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_invalid = 1, exit_numerical = 2 };

/// Entry point of the `vscope` tool: simulate, diagnose, covers, sparseness, report.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Same, with the arguments after the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vscope
