// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace mabe {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // runtime failure or a failed check
  kExitBadConfig = 2,   // invalid flags or configuration
};

/// Entry point for `mabe train|decode|sweep|theorem|gradcheck|evaluate|report`.
/// Usable in-process; all console output goes to the two streams.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mabe
