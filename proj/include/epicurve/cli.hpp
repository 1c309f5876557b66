#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epicurve {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2, kExitTolerance = 3 };

/// Runs one command line (without the program name); all output goes to the given streams and files.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace epicurve
