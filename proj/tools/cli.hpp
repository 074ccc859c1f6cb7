#pragma once

#include <string>
#include <vector>

namespace curation::cli {

/// Runs the `curate` command line. `args[0]` is the program name. Returns the
/// process exit code: 0 on success, 1 for data or I/O failures, 2 for usage
/// errors.
int run(const std::vector<std::string>& args);

}  // namespace curation::cli
