#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pelab::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;  // bad flags, bad values, malformed input
inline constexpr int kIoError = 2;

// Parses argv (argv[0] is the program name), runs one subcommand and writes
// run.json next to --out (or into the working directory).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pelab::cli
