// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace ropeext::cli {

/// Runs one `ropeext` invocation. Returns the process exit code: 0 on success,
/// 1 on a runtime error, 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ropeext::cli
