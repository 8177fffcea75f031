// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "isd/analytics.h"
#include "isd/process_sim.h"

namespace isd {

/// One row of the shared analytics/simulation CSV schema.
struct SweepRow {
  std::string method;
  int stride = 0;
  double p = 0.0;
  std::uint64_t cycles = 0;
  double tpf = 0.0;
  double tpf_se = 0.0;
  double oh_var = 0.0;
  double oh_fix = 0.0;
  double efficiency = 0.0;
};

inline constexpr const char* kSweepCsvHeader =
    "method,N,p,cycles,tpf,tpf_se,oh_var,oh_fix,efficiency";

/// Closed-form rows: cycles = 0 and tpf_se = 0. ISD rows carry both overhead
/// accountings; efficiency uses the one the method names.
std::vector<SweepRow> rows_from_curve(const ParadigmCurve& curve);

/// Simulation row; efficiency uses the accounting the method names.
SweepRow row_from_simulation(Paradigm method, int stride, double p, const SimResult& result);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace isd
