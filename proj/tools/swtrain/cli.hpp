#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace swtrain::cli {

// Runs one command line; args excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swtrain::cli
