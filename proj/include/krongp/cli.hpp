#pragma once

namespace krongp {

/// Entry point for the `krongp` binary.  Exit codes: 0 clean,
/// 2 completed with diagnostics warnings, 1 error (including usage).
int run_cli(int argc, const char* const* argv);

}  // namespace krongp
