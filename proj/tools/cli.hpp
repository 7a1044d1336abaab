#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace liftpose {

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace liftpose
