#pragma once

namespace spill {

/// Subcommand dispatcher for the `spill` tool.
/// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int run_cli(int argc, const char* const* argv);

} // namespace spill
