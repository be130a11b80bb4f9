#pragma once

#include <string>

namespace pmv {

/// Exit codes: 0 success, 1 invariant-suite failure, 2 unparseable config,
/// 3 I/O failure.
enum ExitCode { kOk = 0, kCheckFailed = 1, kBadConfig = 2, kIoError = 3 };

/// Runs one subcommand against a config file, writing artifacts (CSV tables
/// and JSON summaries, each stamped with the config hash and seed list) into
/// the output directory. `out_override` empty means the config's output.dir.
///
/// Subcommands: validate-operators, omega, rates, tangency, approx-solve,
/// near-viability, stabilize.
int run_subcommand(const std::string& subcommand, const std::string& config_path,
                   const std::string& out_override, unsigned workers);

}  // namespace pmv
