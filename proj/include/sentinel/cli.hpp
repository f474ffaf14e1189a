#pragma once

#include <string>
#include <vector>

namespace sentinel {

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 1 validation/usage error, 2 internal error.
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, const char* const* argv);

}  // namespace sentinel
