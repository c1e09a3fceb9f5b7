#pragma once

#include <iosfwd>

namespace evoconv::cli {

enum ExitCode : int { kExpected = 0, kUsageError = 1, kUnexpectedVerdict = 2 };

/// Full command-line entry point; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace evoconv::cli
