#pragma once

#include <iosfwd>

namespace molqca {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 1,     ///< usage, config or output-path problems
    exit_numerical_error = 2,  ///< integrator or solver failure
};

/// Entry point behind the molqca executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace molqca
