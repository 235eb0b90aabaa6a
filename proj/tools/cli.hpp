#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sortform::cli {

// Exit codes: 0 success, 1 validation or I/O failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

// Runs the `sortform` command line. argv[0] is the program name.
int run(const std::vector<std::string> &argv, std::ostream &out, std::ostream &err);
int run(int argc, char **argv);

}  // namespace sortform::cli
