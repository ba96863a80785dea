#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace atntopo {

/// Runs the command-line interface. args excludes the program name.
/// Returns the process exit code; failures print one line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest round-trip form, with ".0" appended when the result looks integral.
std::string format_metric(double v);

}  // namespace atntopo
