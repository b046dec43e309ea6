#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqprobe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. `in` feeds commands
/// that read lines from stdin.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace seqprobe::cli
