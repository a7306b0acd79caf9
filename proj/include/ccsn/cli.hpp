// Command-line front end.  Writes CSV with '#' metadata lines.
#pragma once

#include <ostream>

namespace ccsn::cli {

enum ExitCode { ok = 0, usage = 1, parse_error = 2, numerical_error = 3 };

/// Thread count for the compute kernels (OpenMP); 0 leaves the runtime default.
inline constexpr const char* threads_env = "CCSN_THREADS";

/// Full command line including argv[0].  Data goes to `out` unless -o is given;
/// diagnostics and the machine-readable error line go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ccsn::cli
