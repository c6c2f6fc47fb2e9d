#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stance {

// Exit statuses of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Entry point behind the `stance` executable. `args` excludes the program
// name; the first element names the subcommand
// (import | stats | train | search | eval | predict).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stance
