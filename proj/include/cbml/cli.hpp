#pragma once

#include <string>
#include <vector>

namespace cbml {

/// Full command-line entry point, factored out of main() so tests can drive
/// it in-process. `args` excludes the program name. Returns the process exit
/// status: 0 success, 1 runtime failure, 2 usage error.
int run_cli(const std::vector<std::string>& args);

}  // namespace cbml
