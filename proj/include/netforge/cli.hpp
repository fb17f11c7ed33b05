#pragma once

#include <iosfwd>

namespace netforge::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kUsageError = 2;

// Entry point of the netforge command line; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netforge::cli
