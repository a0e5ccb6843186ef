#pragma once

// Command-line front end. Every verb is reachable through run_cli so that the
// tool and the tests share one code path.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error (including
// bad command-line usage), 3 data error, 4 numerical failure.

#include <exception>
#include <ostream>
#include <string>
#include <vector>

namespace daiqa::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Maps an exception to its exit code.
int exit_code_for(const std::exception& e);

/// args excludes the program name. Normal output goes to `out`, diagnostics
/// to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace daiqa::pipeline
