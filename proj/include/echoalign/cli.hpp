#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace echoalign {

/// Runs the command-line tool. `args` excludes the program name.
/// Returns 0 on success, 1 on a usage error (usage text goes to `err`),
/// 2 on a data error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace echoalign
