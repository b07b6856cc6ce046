#pragma once

#include <iosfwd>

namespace repu::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_numerical = 2;

/// Parses argv, runs one subcommand. Results go to files or `out`; the run log
/// (version, full config, seed) and diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace repu::cli
