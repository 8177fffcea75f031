// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/sweep_csv.h"

#include <cstdio>

namespace isd {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::vector<SweepRow> rows_from_curve(const ParadigmCurve& curve) {
  std::vector<SweepRow> rows;
  rows.reserve(curve.samples.size());
  const bool isd =
      curve.method == Paradigm::kIsdVariable || curve.method == Paradigm::kIsdFixed;
  for (const auto& s : curve.samples) {
    SweepRow row;
    row.method = to_string(curve.method);
    row.stride = curve.stride;
    row.p = s.p;
    row.tpf = s.tpf;
    if (isd) {
      row.oh_var = oh_isd(curve.stride, s.p, QueryAccounting::kVariable);
      row.oh_fix = oh_isd(curve.stride, s.p, QueryAccounting::kFixed);
    } else {
      row.oh_var = s.oh;
      row.oh_fix = s.oh;
    }
    row.efficiency = s.efficiency;
    rows.push_back(row);
  }
  return rows;
}

SweepRow row_from_simulation(Paradigm method, int stride, double p, const SimResult& result) {
  SweepRow row;
  row.method = to_string(method);
  row.stride = stride;
  row.p = p;
  row.cycles = result.counters.cycles;
  row.tpf = result.tpf;
  row.tpf_se = result.tpf_se;
  row.oh_var = result.oh_var;
  row.oh_fix = result.oh_fix;
  const double oh = method == Paradigm::kIsdFixed ? result.oh_fix : result.oh_var;
  row.efficiency = oh > 0.0 ? result.tpf / oh : 0.0;
  return row;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.stride << ',' << num(r.p) << ',' << r.cycles << ',' << num(r.tpf)
        << ',' << num(r.tpf_se) << ',' << num(r.oh_var) << ',' << num(r.oh_fix) << ','
        << num(r.efficiency) << '\n';
  }
}

}  // namespace isd
