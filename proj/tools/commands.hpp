#ifndef DSOM_TOOLS_COMMANDS_HPP
#define DSOM_TOOLS_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace dsom::cli {

/// Exit codes shared by every subcommand.
enum Exit : int {
    ok = 0,
    mismatch = 1,
    usage = 2,
};

/// Runs one CLI invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dsom::cli

#endif // DSOM_TOOLS_COMMANDS_HPP
