// Copyright 2026 The pnpdepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pnp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // usage, config or IO error
inline constexpr int kExitNumeric = 3;  // divergence or non-finite values

/// Entry point of the pnpdepth tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pnp
