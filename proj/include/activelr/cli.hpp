#pragma once

#include <ostream>

namespace activelr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDiverged = 2;
/// verify only: a property check reported a failure.
inline constexpr int kExitCheckFailed = 3;

/// Entry point for the `activelr` executable. Subcommands: train, toy,
/// verify, sweep, serve. Every subcommand accepts --seed (falling back to
/// the ACTIVELR_SEED environment variable) and --out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace activelr
