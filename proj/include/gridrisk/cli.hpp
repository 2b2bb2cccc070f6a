#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridrisk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // computational failure
inline constexpr int kExitUsage = 2;    // usage or input error

/// Runs the command line `args` (args[0] is the program name). Diagnostics go
/// to err, summaries to out. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridrisk::cli
