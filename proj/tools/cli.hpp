#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dtwpa::cli {

/// Entry point shared by the executable and the tests. Returns the process
/// exit code: 0 when every requested output was written, 1 on a runtime
/// failure, 2 on invalid arguments or manifests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dtwpa::cli
