#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace entlab::cli {

enum ExitCode : int { ok = 0, validation = 2, numerical = 3, io = 4 };

/// Runs one command line (without the program name). Reports go to `out`,
/// diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes `contents` to `path` through a sibling temporary file and a rename.
void write_atomic(const std::string& path, const std::string& contents);

}  // namespace entlab::cli
