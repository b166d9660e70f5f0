#pragma once

#include <string>
#include <vector>

namespace skillrank::cli {

// Runs one CLI invocation; `args` excludes the program name. Returns the
// process exit status. Exposed as a library call so tests can drive the
// exact command surface.
int dispatch(const std::vector<std::string>& args);

int run(int argc, char** argv);

}  // namespace skillrank::cli
