#pragma once

#include <string>
#include <vector>

namespace coupled::cli {

// Runs the command line tool on the given arguments (program name excluded).
// Exit codes: 0 success, 2 configuration error, 3 data error.
int run(const std::vector<std::string>& args);

}  // namespace coupled::cli
