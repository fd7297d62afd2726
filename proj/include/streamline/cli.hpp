#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace streamline {

// Exit codes of the command-line front end.
enum ExitCode : int {
  ExitOk = 0,
  ExitFailure = 1,
  ExitConfig = 2,
  ExitEmpty = 3,
  ExitThreshold = 4,
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Fixed 17-significant-digit formatting used by every CSV writer; "nan" for NaN.
std::string format_number(double v);

}  // namespace streamline
