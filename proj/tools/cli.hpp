#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ftheat::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;

/// Runs one command line (without the program name). "-" as a path means
/// `in` or `out`. Logs the resolved configuration and any warnings to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace ftheat::cli
