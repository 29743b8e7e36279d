#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vemlump {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2 };

/// Entry point of the `vemlump` tool: subcommands mesh, solve, convergence
/// and spectral. Diagnostics go to `err`, progress and results to `out`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vemlump
