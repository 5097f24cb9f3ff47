#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nsp {

/// Exit codes: 0 success, 1 validation error or bad usage, 2 runtime abort.
int cli_main(int argc, char** argv);
/// args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nsp
