#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rdpca {

/// Exit codes of cli_main.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Command-line entry point. `args` excludes the program name.
///   estimate | dpca | experiment <scenario> | stein
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace rdpca
