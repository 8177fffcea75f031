// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/analytics.h"

#include <algorithm>
#include <cmath>

#include "isd/errors.h"

namespace isd {

namespace {

void check_p(double p, const char* op) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput(std::string(op) + ": p must lie in [0, 1]");
}

// 2 + P_1 + ... + P_{N-2}
double isd_token_numerator(const AcceptanceSchedule& s) {
  double sum = 2.0;
  for (int k = 1; k <= s.stride() - 2; ++k) sum += s.cumulative(k);
  return sum;
}

double binomial_pmf(int n, int k, double p) {
  // C(n, k) p^k (1-p)^(n-k), with 0^0 = 1 via std::pow.
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

}  // namespace

const char* to_string(Paradigm method) {
  switch (method) {
    case Paradigm::kIsdVariable:
      return "isd-variable";
    case Paradigm::kIsdFixed:
      return "isd-fixed";
    case Paradigm::kSdar:
      return "sdar";
    case Paradigm::kTidar:
      return "tidar";
  }
  return "unknown";
}

std::optional<Paradigm> parse_paradigm(std::string_view name) {
  if (name == "isd-variable" || name == "isd") return Paradigm::kIsdVariable;
  if (name == "isd-fixed") return Paradigm::kIsdFixed;
  if (name == "sdar") return Paradigm::kSdar;
  if (name == "tidar") return Paradigm::kTidar;
  return std::nullopt;
}

double tpf_isd(const AcceptanceSchedule& schedule) {
  return isd_token_numerator(schedule) / (2.0 - schedule.cumulative(schedule.stride() - 1));
}

double tpf_isd(int stride, double p) {
  check_p(p, "tpf_isd");
  return tpf_isd(AcceptanceSchedule::uniform(stride, p));
}

double oh_isd(const AcceptanceSchedule& schedule, QueryAccounting accounting) {
  const double n = schedule.stride();
  const double all_pass = schedule.cumulative(schedule.stride() - 1);
  const double tokens = isd_token_numerator(schedule);
  if (accounting == QueryAccounting::kVariable) return (3.0 * n - 1.0 - n * all_pass) / tokens;
  return (2.0 * n - 1.0) * (2.0 - all_pass) / tokens;
}

double oh_isd(int stride, double p, QueryAccounting accounting) {
  check_p(p, "oh_isd");
  return oh_isd(AcceptanceSchedule::uniform(stride, p), accounting);
}

double sdar_expected_steps(int block, double p) {
  if (block < 0) throw InvalidInput("sdar_expected_steps: N must be >= 0");
  check_p(p, "sdar_expected_steps");
  // E[S|R] = 1 + sum_h Binom(R, h, p) E[S | R - max(h, 1)]; R - max(h,1) < R.
  std::vector<double> expected(static_cast<std::size_t>(block) + 1, 0.0);
  for (int r = 1; r <= block; ++r) {
    double e = 1.0;
    for (int h = 0; h <= r; ++h) {
      e += binomial_pmf(r, h, p) * expected[static_cast<std::size_t>(r - std::max(h, 1))];
    }
    expected[static_cast<std::size_t>(r)] = e;
  }
  return expected[static_cast<std::size_t>(block)];
}

TpfOhPair tpf_oh_sdar(int block, double p) {
  if (block < 1) throw InvalidInput("tpf_oh_sdar: N must be >= 1");
  const double forwards = sdar_expected_steps(block, p) + 1.0;
  return TpfOhPair{static_cast<double>(block) / forwards, forwards};
}

TpfOhPair tpf_oh_tidar(int stride, double p) {
  if (stride < 1) throw InvalidInput("tpf_oh_tidar: N must be >= 1");
  check_p(p, "tpf_oh_tidar");
  // 1 + p + ... + p^{N-1}; the polynomial form has no p = 1 singularity.
  double tpf = 0.0;
  double power = 1.0;
  for (int j = 0; j < stride; ++j) {
    tpf += power;
    power *= p;
  }
  const double queries = static_cast<double>(stride) * static_cast<double>(stride + 1);
  return TpfOhPair{tpf, queries / tpf};
}

TpfOhPair tpf_oh(Paradigm method, int stride, double p) {
  switch (method) {
    case Paradigm::kIsdVariable:
      return {tpf_isd(stride, p), oh_isd(stride, p, QueryAccounting::kVariable)};
    case Paradigm::kIsdFixed:
      return {tpf_isd(stride, p), oh_isd(stride, p, QueryAccounting::kFixed)};
    case Paradigm::kSdar:
      return tpf_oh_sdar(stride, p);
    case Paradigm::kTidar:
      return tpf_oh_tidar(stride, p);
  }
  throw InvalidInput("tpf_oh: unknown method");
}

double efficiency(Paradigm method, int stride, double p) {
  const auto v = tpf_oh(method, stride, p);
  return v.tpf / v.oh;
}

std::optional<double> break_even_acceptance(Paradigm method, int stride) {
  auto excess = [&](double p) { return efficiency(method, stride, p) - 1.0; };
  if (excess(1.0) <= 0.0) return std::nullopt;
  if (excess(0.0) >= 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<double> acceptance_for_tpf(Paradigm method, int stride, double target_tpf) {
  auto tpf = [&](double p) { return tpf_oh(method, stride, p).tpf; };
  if (target_tpf < tpf(0.0) || target_tpf > tpf(1.0)) return std::nullopt;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (tpf(mid) < target_tpf ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ParadigmCurve curve_sweep(Paradigm method, int stride, std::span<const double> p_grid) {
  ParadigmCurve curve;
  curve.method = method;
  curve.stride = stride;
  curve.samples.reserve(p_grid.size());
  for (double p : p_grid) {
    check_p(p, "curve_sweep");
    const auto v = tpf_oh(method, stride, p);
    curve.samples.push_back(CurveSample{p, v.tpf, v.oh, v.tpf / v.oh});
  }
  return curve;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw InvalidInput("make_grid: need step > 0 and lo <= hi");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = std::min(hi, lo + static_cast<double>(i) * step);
  return grid;
}

}  // namespace isd
