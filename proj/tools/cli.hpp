#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ocpscan::cli {

/// Runs the command line with the given streams; returns the exit status.
/// 0 on success, 2 for rejected parameters, 1 for any other failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ocpscan::cli
