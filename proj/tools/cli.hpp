#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace credal::cli {

// args excludes the program name. Returns 0 on success, 1 on a validation
// or usage error, 2 when a solver fails to converge.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace credal::cli
