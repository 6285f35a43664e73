#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tsad::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,      ///< bad flags, unknown subcommand
    kExitInput = 3,      ///< unreadable or malformed input data
    kExitNumerical = 4,  ///< a statistic or fit failed numerically
    kExitConfig = 5,     ///< parameter values or config file rejected
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a, 64 bit.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace tsad::cli
