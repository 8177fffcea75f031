// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors
//
// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "isd/analytics.h"
#include "isd/batch_sim.h"
#include "isd/decoder.h"
#include "isd/distribution.h"
#include "isd/process_sim.h"
#include "isd/toy_models.h"
#include "isd/train_kit.h"
#include "oracles.h"

using namespace isd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(const char* name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out = body();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (time_limit_s > 0.0 && secs >= time_limit_s) {
    out.pass = false;
    out.detail += " [over time limit " + std::to_string(time_limit_s) + " s]";
  }
  std::printf("%s %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str(), secs);
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Distribution random_dist(std::size_t v, RngStream& rng) {
  std::vector<double> w(v);
  for (auto& x : w) x = rng.uniform() < 0.2 ? 0.0 : rng.exponential(1.0);
  w[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(v) - 1))] += 1e-3;
  return Distribution::normalized(w);
}

Outcome speculative_identity() {
  RngStream rng(2026, 1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto v = static_cast<std::size_t>(rng.uniform_int(2, 64));
    const auto p = random_dist(v, rng);
    const auto q = random_dist(v, rng);
    const auto out = one_step_output_distribution(p, q, 0.0);
    for (std::size_t k = 0; k < v; ++k) worst = std::max(worst, std::abs(out.probs()[k] - p.probs()[k]));
  }
  return {worst <= 1e-12, fmt("max |out - p| = %.3g over 1000 pairs", worst)};
}

Outcome end_to_end_lossless() {
  RngStream model_rng(2026, 2);
  const auto base = std::make_shared<const TabularAnchorModel>(random_model(4, 1, 0.3, model_rng));
  const std::vector<TokenId> prompt{0};
  const std::size_t length = 5;
  const auto exact = oracle::sequence_probabilities(*base, prompt, length);
  RngStream offset_rng(2026, 3);
  const std::vector<std::pair<std::string, std::shared_ptr<const GatedResidualModel>>> settings{
      {"zero", std::make_shared<const GatedResidualModel>(GatedResidualModel::zero(base))},
      {"random", std::make_shared<const GatedResidualModel>(
                     GatedResidualModel::random(base, 1.5, offset_rng))},
      {"adversarial", std::make_shared<const GatedResidualModel>(
                          GatedResidualModel::adversarial(base, 6.0))},
  };
  const int samples = 1000000;
  Outcome out;
  for (const auto& [name, gated] : settings) {
    std::vector<double> counts(exact.size(), 0.0);
    StrideConfig cfg;
    cfg.stride = 4;
    cfg.lossless = true;
    cfg.max_new_tokens = length;
    for (int s = 0; s < samples; ++s) {
      cfg.seed = static_cast<std::uint64_t>(s);
      const auto t = decode_lossless(*base, gated, prompt, cfg);
      std::size_t code = 0;
      for (TokenId tok : t.output) code = code * 4 + static_cast<std::size_t>(tok);
      counts[code] += 1.0;
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) tv += std::abs(counts[i] / samples - exact[i]);
    tv *= 0.5;
    out.pass = out.pass && tv < 0.01;
    out.detail += name + " TV " + fmt("%.4f", tv) + "; ";
  }
  out.detail += "1e6 samples each, V=4, length 5";
  return out;
}

Outcome tpf_boundaries() {
  Outcome out;
  for (int n : {2, 3, 4, 8}) {
    const bool ok = tpf_isd(n, 1.0) == static_cast<double>(n) && tpf_isd(n, 0.0) == 1.0;
    out.pass = out.pass && ok;
  }
  out.detail = "tpf(N,1) = N and tpf(N,0) = 1 exactly for N in {2,3,4,8}";
  return out;
}

Outcome closed_form_vs_monte_carlo() {
  Outcome out;
  double worst = 0.0;
  const std::uint64_t cycles = 1000000;
  std::uint64_t stream = 0;
  for (int n : {2, 3, 4, 8}) {
    for (double p : {0.5, 0.7, 0.85, 0.95}) {
      RngStream rng(2026, 100 + stream++);
      const auto r = simulate_isd(n, AcceptanceSchedule::uniform(n, p), cycles, rng);
      worst = std::max({worst, std::abs(r.tpf / tpf_isd(n, p) - 1.0),
                        std::abs(r.oh_var / oh_isd(n, p, QueryAccounting::kVariable) - 1.0),
                        std::abs(r.oh_fix / oh_isd(n, p, QueryAccounting::kFixed) - 1.0)});
    }
  }
  double worst_sdar = 0.0, worst_tidar = 0.0;
  for (int n : {2, 3, 4, 8}) {
    for (double p : {0.5, 0.7, 0.85, 0.95}) {
      RngStream a(2026, 200 + stream), b(2026, 300 + stream);
      ++stream;
      const auto sd = simulate_sdar(n, p, cycles, a);
      worst_sdar = std::max(worst_sdar, std::abs(sd.mean_denoise_steps / sdar_expected_steps(n, p) - 1.0));
      const auto ti = simulate_tidar(n, p, cycles, b);
      worst_tidar = std::max(worst_tidar, std::abs(ti.tpf / tpf_oh_tidar(n, p).tpf - 1.0));
    }
  }
  out.pass = worst < 0.005 && worst_sdar < 0.005 && worst_tidar < 0.005;
  out.detail = "worst relative error isd " + fmt("%.4f", worst) + ", sdar steps " +
               fmt("%.4f", worst_sdar) + ", tidar tpf " + fmt("%.4f", worst_tidar) +
               " at 1e6 cycles";
  return out;
}

Outcome break_even_points() {
  const auto var = break_even_acceptance(Paradigm::kIsdVariable, 4);
  const auto fix = break_even_acceptance(Paradigm::kIsdFixed, 4);
  const auto tidar = break_even_acceptance(Paradigm::kTidar, 4);
  const double cap = efficiency(Paradigm::kTidar, 4, 1.0);
  Outcome out;
  out.pass = var && std::abs(*var - 0.83) <= 0.01 && fix && std::abs(*fix - 0.86) <= 0.01 &&
             !tidar && cap == 0.8;
  out.detail = "variable " + fmt("%.5f", var.value_or(-1)) + ", fixed " +
               fmt("%.5f", fix.value_or(-1)) + ", tidar " +
               (tidar ? fmt("%.5f", *tidar) : std::string("no-crossing")) + ", tidar eff(1) " +
               fmt("%.17g", cap);
  return out;
}

Outcome overhead_points() {
  const auto p = acceptance_for_tpf(Paradigm::kIsdVariable, 4, 2.5);
  const double oh = p ? oh_isd(4, *p, QueryAccounting::kVariable) : -1.0;
  const auto pt = acceptance_for_tpf(Paradigm::kTidar, 4, 2.56);
  const double tidar_oh = pt ? tpf_oh_tidar(4, *pt).oh : -1.0;
  Outcome out;
  out.pass = std::abs(oh - 2.45) <= 0.05 && std::abs(tidar_oh - 7.8) <= 0.1;
  out.detail = "isd p " + fmt("%.5f", p.value_or(-1)) + " oh_var " + fmt("%.4f", oh) +
               "; tidar oh at tpf 2.56 = " + fmt("%.4f", tidar_oh);
  return out;
}

Outcome sdar_identities() {
  Outcome out;
  double worst = 0.0;
  bool cap_ok = true;
  for (int n : {2, 4, 8}) {
    for (int i = 0; i < 100; ++i) {
      const double p = i / 99.0;
      const auto v = tpf_oh_sdar(n, p);
      worst = std::max(worst, std::abs(v.tpf * v.oh - n));
    }
    cap_ok = cap_ok && std::abs(tpf_oh_sdar(n, 1.0).tpf - n / 2.0) <= 1e-12;
  }
  out.pass = worst <= 1e-12 && cap_ok;
  out.detail = "max |tpf*oh - N| = " + fmt("%.3g", worst) + " on 100-point grids; tpf(1) = N/2 " +
               (cap_ok ? "holds" : "fails");
  return out;
}

Outcome mask_goldens() {
  const std::string dir = ISD_GOLDEN_DIR;
  const bool idlm = mask_to_bitmap(build_mask({6, 2, MaskVariant::kIdlm})) ==
                    read_file(dir + "/mask_idlm_L6_B2.txt");
  const bool sdar = mask_to_bitmap(build_mask({6, 2, MaskVariant::kSdar})) ==
                    read_file(dir + "/mask_sdar_L6_B2.txt");
  return {idlm && sdar, std::string("idlm ") + (idlm ? "match" : "differs") + ", sdar " +
                            (sdar ? "match" : "differs")};
}

Outcome loss_identity() {
  RngStream rng(2026, 4);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double lm = rng.exponential(0.5) + 1e-6;
    const double lc = rng.exponential(0.5) + 1e-6;
    const auto r = auto_balanced_loss(lm, lc);
    worst = std::max(worst, std::abs(r.total - 2.0 * lm));
  }
  return {worst <= 1e-12, "max |total - 2 l_mask| = " + fmt("%.3g", worst) + " over 1000 pairs"};
}

Outcome tau_behavior() {
  RngStream rng(2026, 5);
  const auto base = random_model(8, 1, 0.5, rng);
  const auto table = std::make_shared<const TabularAnchorModel>(random_model(8, 1, 0.5, rng));
  const std::vector<TokenId> prompt{0};
  Outcome out;
  double previous = -1.0;
  for (double tau : {0.0, 0.1, 0.2, 0.5, 1.0}) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      StrideConfig cfg;
      cfg.stride = 4;
      cfg.tau = tau;
      cfg.seed = seed;
      cfg.max_new_tokens = 64;
      const auto t = decode(base, ProposalSource::independent(table), prompt, cfg);
      for (double a : t.acceptance_ratios) sum += a;
      count += t.acceptance_ratios.size();
    }
    const double mean = sum / static_cast<double>(count);
    out.pass = out.pass && mean >= previous;
    out.detail += fmt("tau %.1f", tau) + fmt(" -> %.4f; ", mean);
    previous = mean;
  }
  out.detail += "500 fixed seeds";
  return out;
}

Outcome batch_ordering() {
  const auto cfg = serve_config_from_json(read_file(std::string(ISD_CONFIG_DIR) + "/serve_default.json"));
  const ServeRun* isd = nullptr;
  const ServeRun* sync = nullptr;
  for (const auto& r : cfg.runs) {
    if (r.policy == BatchPolicy::kContinuous && r.workload.process.kind == ProcessKind::kIsd) isd = &r;
    if (r.policy == BatchPolicy::kBlockSync && r.workload.process.kind == ProcessKind::kSdar) sync = &r;
  }
  if (!isd || !sync) return {false, "bundled config lacks the isd/continuous or sdar/block-sync run"};
  Outcome out;
  double worst_ratio = 1e300;
  int makespan_violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = run_serving_sim(isd->workload, isd->policy, cfg.cost, cfg.stationary, seed);
    const auto b = run_serving_sim(sync->workload, sync->policy, cfg.cost, cfg.stationary, seed);
    worst_ratio = std::min(worst_ratio, c.aggregate_tps / b.aggregate_tps);
    if (b.makespan_ms < c.makespan_ms) ++makespan_violations;
  }
  out.pass = worst_ratio >= 1.5 && makespan_violations == 0;
  out.detail = "batch " + std::to_string(isd->workload.max_batch) + ", min throughput ratio " +
               fmt("%.3f", worst_ratio) + ", makespan violations " +
               std::to_string(makespan_violations) + " over 20 seeds";
  return out;
}

}  // namespace

int main() {
  run("speculative-identity", 1.0, speculative_identity);
  run("end-to-end-losslessness", 120.0, end_to_end_lossless);
  run("tpf-boundary-cases", 0.0, tpf_boundaries);
  run("closed-form-vs-monte-carlo", 300.0, closed_form_vs_monte_carlo);
  run("break-even-points", 0.0, break_even_points);
  run("overhead-point-checks", 0.0, overhead_points);
  run("sdar-identities", 0.0, sdar_identities);
  run("mask-golden-files", 0.0, mask_goldens);
  run("loss-identities", 0.0, loss_identity);
  run("tau-behavior", 0.0, tau_behavior);
  run("batch-sim-ordering", 0.0, batch_ordering);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures;
}
