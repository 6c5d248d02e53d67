#pragma once

#include <string>
#include <vector>

namespace condfilter {

// Runs one CLI invocation. Exit codes: 0 success, 1 usage error, 2 data or
// argument error, 3 internal error.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args);  // args without program name

}  // namespace condfilter
