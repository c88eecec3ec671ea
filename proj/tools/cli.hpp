#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mgt::cli {

// Exit codes: 0 success, 1 usage/config error, 2 data error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mgt::cli
