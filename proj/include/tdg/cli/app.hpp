#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tdg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. `args` excludes the program name. Usage problems
// return 2 with usage text on `err`; operational failures return 1 after
// writing a one-line JSON error record to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Thread cap from --threads or, when absent, the TDG_THREADS variable.
// Throws UsageError on a malformed or zero value.
unsigned resolve_threads(int flag_value, const char* env_value);

// One JSON object on a single line: {"status":"error","kind":...,"message":...}.
std::string error_line(const std::string& kind, const std::string& message);

}  // namespace tdg::cli
