#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tmac::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int { kOk = 0, kInputError = 2, kShapeError = 3, kNumericalError = 4 };

/// Runs the tool on `args` (without the program name). The JSON report goes to
/// `out`, progress and error messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tmac::cli
