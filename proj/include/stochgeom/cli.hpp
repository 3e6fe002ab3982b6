#pragma once

// Command-line front end. Exit codes: 0 success, 1 verification or runtime
// failure, 2 usage error.

namespace stochgeom::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, const char* const* argv);

}  // namespace stochgeom::cli
