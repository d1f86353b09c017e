#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mis::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `mis` executable. args[0] is the program name.
// Returns 0 on success, 1 on a runtime failure and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mis::cli
