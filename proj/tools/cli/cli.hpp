#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace lwir::cli {

// Runs the `lwir` command line. `args` excludes the program name. Returns the
// process exit code: 0 on success, 1 on a failed command, 2 on a usage error.
// Failures print one line "error: <kind>: <message>" to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>& env = {});

}  // namespace lwir::cli
