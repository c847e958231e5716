#ifndef PAIRRANK_CLI_HPP_
#define PAIRRANK_CLI_HPP_

#include <map>
#include <string>
#include <vector>

namespace pairrank {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point of the pairrank command. args[0] is the program name.
// Returns the process exit code.
int run_cli(const std::vector<std::string>& args);

// Reads "key=value" lines; '#' starts a comment line. Throws UsageError on
// a line without '='.
std::map<std::string, std::string> read_config_file(const std::string& path);

}  // namespace pairrank

#endif  // PAIRRANK_CLI_HPP_
