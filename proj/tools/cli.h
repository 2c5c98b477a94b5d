#ifndef NERLP_TOOLS_CLI_H
#define NERLP_TOOLS_CLI_H

#include <iosfwd>
#include <string>
#include <vector>

namespace nerlp::cli {

inline constexpr const char* kToolVersion = "1.0.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Runs one command line. `args` excludes the program name.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nerlp::cli

#endif  // NERLP_TOOLS_CLI_H
