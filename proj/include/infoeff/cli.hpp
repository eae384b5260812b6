#pragma once

#include <iosfwd>

namespace infoeff {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNonConvergence = 2;

/// Command-line front end. Subcommands: gen, simulate, equilibrium, replica,
/// diagnostics, sweep, calibrate. Output goes to --out or `out`; logs to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace infoeff
