#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csteer::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Version stamp written into every manifest.
std::string version();

/// Parses `args` (without the program name) and runs one of
/// audit | spectrum | fit | demo. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace csteer::cli
