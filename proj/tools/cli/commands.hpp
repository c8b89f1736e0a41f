#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace metalstm::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsage = 2 };

/// Entry point shared by the binary and the tests. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace metalstm::cli
