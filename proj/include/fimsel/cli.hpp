#pragma once

namespace fimsel {

// Full command-line front end; returns the process exit code.
// 0 success, 2 config or usage error, 3 numerical failure, 4 oracle guard.
int run_cli(int argc, const char* const* argv);

}  // namespace fimsel
