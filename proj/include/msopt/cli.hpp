#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace msopt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. args excludes the program name, e.g.
/// {"optimize", "--config", "run.cfg", "--assert"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msopt
