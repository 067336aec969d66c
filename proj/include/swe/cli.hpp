#pragma once

#include <string>
#include <vector>

namespace swe::cli {

// Entry point behind the `swe` binary; args exclude the program name.
// Returns a process exit code; failures print one line to stderr.
int run(const std::vector<std::string>& args);

}  // namespace swe::cli
