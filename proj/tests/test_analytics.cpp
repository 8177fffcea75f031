// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "isd/analytics.h"
#include "isd/errors.h"
#include "isd/sweep_csv.h"
#include "oracles.h"

using namespace isd;

TEST_CASE("closed forms agree with the renewal series") {
  for (int n : {2, 3, 4, 8}) {
    for (double p : {0.1, 0.5, 0.7, 0.85, 0.95}) {
      const auto m = oracle::isd_cycle_series(n, p);
      CHECK(tpf_isd(n, p) == doctest::Approx(m.tokens / m.forwards).epsilon(1e-9));
      CHECK(oh_isd(n, p, QueryAccounting::kVariable) ==
            doctest::Approx(m.queries_variable / m.tokens).epsilon(1e-9));
      CHECK(oh_isd(n, p, QueryAccounting::kFixed) ==
            doctest::Approx(m.queries_fixed / m.tokens).epsilon(1e-9));
    }
  }
}

TEST_CASE("boundary values") {
  for (int n : {2, 3, 4, 8}) {
    CHECK(tpf_isd(n, 1.0) == n);
    CHECK(tpf_isd(n, 0.0) == 1.0);
  }
  CHECK_THROWS_AS(tpf_isd(1, 0.5), InvalidInput);
  CHECK_THROWS_AS(tpf_isd(4, 1.5), InvalidInput);
}

TEST_CASE("monotone in p") {
  double prev_tpf = 0.0, prev_oh = 1e9;
  for (double p : make_grid(0.0, 1.0, 0.01)) {
    const double t = tpf_isd(4, p);
    const double o = oh_isd(4, p, QueryAccounting::kVariable);
    CHECK(t >= prev_tpf);
    CHECK(o <= prev_oh + 1e-12);
    prev_tpf = t;
    prev_oh = o;
  }
}

TEST_CASE("reference values at N = 4") {
  CHECK(tpf_isd(4, 0.85) == doctest::Approx(2.5778).epsilon(1e-4));
  CHECK(efficiency(Paradigm::kIsdVariable, 4, 0.85) == doctest::Approx(1.0779).epsilon(1e-4));
  CHECK(efficiency(Paradigm::kIsdFixed, 4, 0.85) == doctest::Approx(0.9493).epsilon(1e-4));
  const double p = *acceptance_for_tpf(Paradigm::kIsdVariable, 4, 2.5);
  CHECK(p == doctest::Approx(0.83656).epsilon(1e-4));
  CHECK(oh_isd(4, p, QueryAccounting::kVariable) == doctest::Approx(2.4483).epsilon(1e-4));
}

TEST_CASE("sdar recursion") {
  const double expected[] = {2.609, 2.272, 1.959, 1.660, 1.510, 1.354, 1.187};
  const double ps[] = {0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95};
  for (int i = 0; i < 7; ++i) {
    CHECK(sdar_expected_steps(4, ps[i]) == doctest::Approx(expected[i]).epsilon(1e-3));
    CHECK(sdar_expected_steps(4, ps[i]) ==
          doctest::Approx(oracle::sdar_steps_by_propagation(4, ps[i])).epsilon(1e-10));
  }
  CHECK(sdar_expected_steps(4, 1.0) == 1.0);
  CHECK(sdar_expected_steps(4, 0.0) == 4.0);
  CHECK(sdar_expected_steps(0, 0.5) == 0.0);
  for (double p : make_grid(0.0, 1.0, 0.05)) {
    const auto v = tpf_oh_sdar(6, p);
    CHECK(v.tpf * v.oh == doctest::Approx(6.0).epsilon(1e-12));
  }
}

TEST_CASE("tidar closed form") {
  for (double p : {0.0, 0.3, 0.8, 1.0}) {
    const auto v = tpf_oh_tidar(4, p);
    CHECK(v.tpf == doctest::Approx(oracle::tidar_tokens_by_pmf(4, p)).epsilon(1e-12));
    CHECK(v.oh * v.tpf == doctest::Approx(20.0));
  }
  CHECK(efficiency(Paradigm::kTidar, 4, 1.0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("break-even points") {
  CHECK(*break_even_acceptance(Paradigm::kIsdVariable, 4) == doctest::Approx(0.83126).epsilon(1e-4));
  CHECK(*break_even_acceptance(Paradigm::kIsdFixed, 4) == doctest::Approx(0.86105).epsilon(1e-4));
  CHECK_FALSE(break_even_acceptance(Paradigm::kTidar, 4).has_value());
  CHECK_FALSE(break_even_acceptance(Paradigm::kSdar, 4).has_value());
  // Efficiency at the root is one.
  for (auto m : {Paradigm::kIsdVariable, Paradigm::kIsdFixed}) {
    for (int n : {3, 4, 8}) {
      const auto root = break_even_acceptance(m, n);
      REQUIRE(root.has_value());
      CHECK(efficiency(m, n, *root) == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  // Block diffusion only reaches efficiency 1 for long blocks.
  const auto sdar8 = break_even_acceptance(Paradigm::kSdar, 8);
  REQUIRE(sdar8.has_value());
  CHECK(efficiency(Paradigm::kSdar, 8, *sdar8) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("acceptance for a tpf target") {
  CHECK_FALSE(acceptance_for_tpf(Paradigm::kIsdVariable, 4, 4.5).has_value());
  CHECK_FALSE(acceptance_for_tpf(Paradigm::kIsdVariable, 4, 0.5).has_value());
  const double p = *acceptance_for_tpf(Paradigm::kTidar, 4, 2.56);
  CHECK(tpf_oh_tidar(4, p).oh == doctest::Approx(20.0 / 2.56).epsilon(1e-9));
}

TEST_CASE("paradigm names") {
  CHECK(parse_paradigm("isd") == Paradigm::kIsdVariable);
  CHECK(parse_paradigm("isd-fixed") == Paradigm::kIsdFixed);
  CHECK_FALSE(parse_paradigm("medusa").has_value());
  for (auto m : {Paradigm::kIsdVariable, Paradigm::kIsdFixed, Paradigm::kSdar, Paradigm::kTidar}) {
    CHECK(parse_paradigm(to_string(m)) == m);
  }
}

TEST_CASE("grid and csv export") {
  const auto grid = make_grid(0.5, 0.95, 0.05);
  CHECK(grid.size() == 10);
  CHECK(grid.back() == 0.95);
  CHECK_THROWS_AS(make_grid(0.5, 0.4, 0.1), InvalidInput);
  const auto curve = curve_sweep(Paradigm::kSdar, 4, grid);
  std::ostringstream out;
  write_sweep_csv(out, rows_from_curve(curve));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == kSweepCsvHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.rfind("sdar,4,", 0) == 0);
  }
  CHECK(rows == 10);
}
