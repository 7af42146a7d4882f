#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sfdet {

/// Runs the command-line front end. `args` excludes the program name.
/// Reports go to `out` unless --output is given; a one-line diagnostic goes
/// to `err` on failure. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sfdet
