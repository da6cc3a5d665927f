#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace txanomaly::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

// Parses and runs one subcommand. Diagnostics go to `err`, progress to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace txanomaly::cli
