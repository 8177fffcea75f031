// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

namespace isd {

/// How propose-only forwards are charged: N queries (variable) or padded to
/// the fused size 2N-1 (fixed).
enum class QueryAccounting { kVariable, kFixed };

}  // namespace isd
