#pragma once

#include <string>
#include <vector>

namespace sgt::cli {

/// Parses arguments (argv[0] is the program name) and runs one subcommand.
/// Returns 0 on success, 1 on usage errors, 2 on data or validation errors.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace sgt::cli
