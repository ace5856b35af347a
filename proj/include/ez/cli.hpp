#pragma once

#include <string>
#include <vector>

namespace ez::cli {

// One entry point, no shell-script recipe. Exit codes: 0 success, 1 domain
// failure (validation errors, training aborts), 2 usage error. Failures
// print a single `ez: error: ...` line on standard error.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace ez::cli
