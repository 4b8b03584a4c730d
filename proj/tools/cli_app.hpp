#pragma once

#include <string>
#include <vector>

namespace holosect {

// Runs the command line tool on args (program name excluded) and returns the
// exit status: 0 pass, 1 suite failure, 2 configuration error.
int cli_main(const std::vector<std::string>& args);

}  // namespace holosect
