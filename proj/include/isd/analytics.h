// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isd/accounting.h"
#include "isd/process_sim.h"

namespace isd {

enum class Paradigm { kIsdVariable, kIsdFixed, kSdar, kTidar };

const char* to_string(Paradigm method);
/// Accepts "isd-variable", "isd-fixed", "sdar", "tidar" ("isd" aliases isd-variable).
std::optional<Paradigm> parse_paradigm(std::string_view name);

// ISD, uniform p (P_k = p^k) and general cumulative schedule.
double tpf_isd(int stride, double p);
double tpf_isd(const AcceptanceSchedule& schedule);
double oh_isd(int stride, double p, QueryAccounting accounting);
double oh_isd(const AcceptanceSchedule& schedule, QueryAccounting accounting);

/// E[S | N] for the Binomial-with-floor denoising process, exact DP.
double sdar_expected_steps(int block, double p);

struct TpfOhPair {
  double tpf = 0.0;
  double oh = 0.0;
};

TpfOhPair tpf_oh_sdar(int block, double p);
TpfOhPair tpf_oh_tidar(int stride, double p);

/// (tpf, oh) for any paradigm; ISD uses the accounting named by the method.
TpfOhPair tpf_oh(Paradigm method, int stride, double p);
double efficiency(Paradigm method, int stride, double p);

/// Acceptance p at which tpf/oh crosses 1, by bisection to 1e-6; nullopt
/// when efficiency never exceeds 1 on [0, 1].
std::optional<double> break_even_acceptance(Paradigm method, int stride);

/// Smallest p with tpf(p) = target (tpf is non-decreasing in p), by bisection;
/// nullopt when target is outside [tpf(0), tpf(1)].
std::optional<double> acceptance_for_tpf(Paradigm method, int stride, double target_tpf);

struct CurveSample {
  double p = 0.0;
  double tpf = 0.0;
  double oh = 0.0;
  double efficiency = 0.0;
};

struct ParadigmCurve {
  Paradigm method = Paradigm::kIsdVariable;
  int stride = 0;
  std::vector<CurveSample> samples;
};

ParadigmCurve curve_sweep(Paradigm method, int stride, std::span<const double> p_grid);

/// Evenly spaced grid lo, lo+step, ..., hi (hi included within step/2).
std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace isd
