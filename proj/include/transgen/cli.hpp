#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace transgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line (without the program name). Never throws; failures
// are reported on err and mapped to the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace transgen::cli
