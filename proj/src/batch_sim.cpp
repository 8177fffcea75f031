// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include "isd/batch_sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <thread>

#include "json.hpp"

#include "isd/errors.h"
#include "isd/process_sim.h"
#include "isd/rng.h"

namespace isd {

void CostModel::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"base_ms", base_ms},
      {"per_request_ms", per_request_ms},
      {"per_query_ms", per_query_ms},
      {"knee_tokens", knee_tokens},
      {"scheduler_overhead_ms", scheduler_overhead_ms},
      {"stationary_overhead_ms", stationary_overhead_ms},
  };
  for (const auto& [name, value] : fields) {
    if (!std::isfinite(value) || value < 0.0) {
      throw InvalidConfig(std::string("cost: field '") + name + "' must be finite and >= 0");
    }
  }
}

double CostModel::forward_ms(std::size_t batch, std::uint64_t queries) const {
  const double excess = std::max(0.0, static_cast<double>(queries) - knee_tokens);
  return base_ms + per_request_ms * static_cast<double>(batch) + per_query_ms * excess;
}

double CostModel::overhead_ms(bool stationary) const {
  return stationary ? stationary_overhead_ms : scheduler_overhead_ms;
}

const char* to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::kIsd:
      return "isd";
    case ProcessKind::kSdar:
      return "sdar";
    case ProcessKind::kAr:
      return "ar";
  }
  return "unknown";
}

const char* to_string(BatchPolicy policy) {
  return policy == BatchPolicy::kContinuous ? "continuous" : "block-sync";
}

BatchPolicy parse_batch_policy(std::string_view name) {
  if (name == "continuous") return BatchPolicy::kContinuous;
  if (name == "block-sync") return BatchPolicy::kBlockSync;
  throw InvalidConfig("policy must be \"continuous\" or \"block-sync\", got \"" +
                      std::string(name) + "\"");
}

void Workload::validate() const {
  if (requests == 0) throw InvalidConfig("workload: field 'requests' must be >= 1");
  if (max_batch == 0) throw InvalidConfig("workload: field 'max_batch' must be >= 1");
  if (min_output_tokens < 1) throw InvalidConfig("workload: field 'min_output_tokens' must be >= 1");
  if (max_output_tokens < min_output_tokens) {
    throw InvalidConfig("workload: field 'max_output_tokens' must be >= min_output_tokens");
  }
  if (arrival.kind == ArrivalKind::kPoisson && !(arrival.rate > 0.0 && std::isfinite(arrival.rate))) {
    throw InvalidConfig("workload: arrival field 'rate' must be > 0 for poisson arrivals");
  }
  if (process.kind != ProcessKind::kAr) {
    if (process.kind == ProcessKind::kIsd && process.stride < 2) {
      throw InvalidConfig("workload: process field 'N' must be >= 2 for isd");
    }
    if (process.stride < 1) throw InvalidConfig("workload: process field 'N' must be >= 1");
    if (!(process.p >= 0.0 && process.p <= 1.0)) {
      throw InvalidConfig("workload: process field 'p' must lie in [0, 1]");
    }
    if (!(process.p_spread >= 0.0 && std::isfinite(process.p_spread))) {
      throw InvalidConfig("workload: process field 'p_spread' must be >= 0");
    }
  }
}

namespace {

struct Request {
  RequestStats stats;
  std::uint64_t remaining = 0;
  RngStream rng;
  std::vector<ForwardStep> unit;
  std::size_t pos = 0;

  bool unit_done() const { return pos >= unit.size(); }
};

std::vector<Request> make_requests(const Workload& w, std::uint64_t seed) {
  RngStream gen(seed, 0);
  std::vector<Request> out;
  out.reserve(w.requests);
  double clock_ms = 0.0;
  for (std::size_t id = 0; id < w.requests; ++id) {
    RequestStats s;
    s.id = id;
    s.target_tokens = static_cast<std::uint64_t>(
        gen.uniform_int(static_cast<std::int64_t>(w.min_output_tokens),
                        static_cast<std::int64_t>(w.max_output_tokens)));
    const double shift = w.process.p_spread * (2.0 * gen.uniform() - 1.0);
    s.acceptance = std::clamp(w.process.p + shift, 0.0, 1.0);
    if (w.arrival.kind == ArrivalKind::kPoisson) clock_ms += 1000.0 * gen.exponential(w.arrival.rate);
    s.arrival_ms = clock_ms;
    out.push_back(Request{s, s.target_tokens, RngStream(seed, 1 + id), {}, 0});
  }
  return out;
}

void draw_unit(Request& r, const CommitProcess& process) {
  r.pos = 0;
  switch (process.kind) {
    case ProcessKind::kIsd:
      r.unit = isd_cycle(AcceptanceSchedule::uniform(process.stride, r.stats.acceptance), r.rng,
                         1u << 20, r.remaining);
      break;
    case ProcessKind::kSdar:
      r.unit = sdar_block(process.stride, r.stats.acceptance, r.rng);
      break;
    case ProcessKind::kAr:
      r.unit = {ForwardStep{1, 1, 1}};
      break;
  }
}

void commit(Request& r, int tokens) {
  const auto take = std::min<std::uint64_t>(r.remaining, static_cast<std::uint64_t>(tokens));
  r.remaining -= take;
  r.stats.tokens += take;
}

class Simulator {
 public:
  Simulator(const Workload& w, const CostModel& cost, bool stationary, std::uint64_t seed)
      : w_(w), cost_(cost), stationary_(stationary), requests_(make_requests(w, seed)) {
    for (std::size_t i = 0; i < requests_.size(); ++i) pending_.push_back(i);
  }

  void run(BatchPolicy policy) {
    while (!pending_.empty() || !active_.empty()) {
      admit();
      if (active_.empty()) {
        clock_ms_ = std::max(clock_ms_, requests_[pending_.front()].stats.arrival_ms);
        continue;
      }
      if (policy == BatchPolicy::kContinuous) {
        continuous_step();
      } else {
        block_round();
      }
    }
  }

  std::vector<Request>& requests() { return requests_; }
  std::uint64_t steps() const { return steps_; }
  double clock_ms() const { return clock_ms_; }
  std::vector<OccupancySample>& occupancy() { return occupancy_; }

 private:
  void admit() {
    while (active_.size() < w_.max_batch && !pending_.empty() &&
           requests_[pending_.front()].stats.arrival_ms <= clock_ms_) {
      active_.push_back(pending_.front());
      pending_.pop_front();
    }
  }

  void advance_clock(std::uint64_t queries) {
    occupancy_.push_back(OccupancySample{clock_ms_, active_.size()});
    clock_ms_ += cost_.forward_ms(active_.size(), queries) + cost_.overhead_ms(stationary_);
    ++steps_;
  }

  void retire_finished() {
    std::erase_if(active_, [&](std::size_t i) {
      Request& r = requests_[i];
      if (r.remaining != 0) return false;
      r.stats.finish_ms = clock_ms_;
      return true;
    });
  }

  void continuous_step() {
    std::uint64_t queries = 0;
    std::vector<const ForwardStep*> steps;
    steps.reserve(active_.size());
    for (std::size_t i : active_) {
      Request& r = requests_[i];
      if (r.unit_done()) draw_unit(r, w_.process);
      steps.push_back(&r.unit[r.pos++]);
      queries += static_cast<std::uint64_t>(steps.back()->queries_variable);
    }
    advance_clock(queries);
    for (std::size_t k = 0; k < active_.size(); ++k) {
      Request& r = requests_[active_[k]];
      ++r.stats.forwards;
      commit(r, steps[k]->tokens);
    }
    retire_finished();
  }

  void block_round() {
    std::size_t round_len = 0;
    for (std::size_t i : active_) {
      Request& r = requests_[i];
      draw_unit(r, w_.process);
      round_len = std::max(round_len, r.unit.size());
    }
    for (std::size_t f = 0; f < round_len; ++f) {
      int widest = 0;
      for (std::size_t i : active_) {
        const Request& r = requests_[i];
        if (f < r.unit.size()) widest = std::max(widest, r.unit[f].queries_variable);
      }
      advance_clock(static_cast<std::uint64_t>(widest) * active_.size());
      for (std::size_t i : active_) {
        Request& r = requests_[i];
        ++r.stats.forwards;
        if (f < r.unit.size()) commit(r, r.unit[f].tokens);
      }
    }
    retire_finished();
  }

  const Workload& w_;
  const CostModel& cost_;
  bool stationary_;
  std::vector<Request> requests_;
  std::deque<std::size_t> pending_;
  std::vector<std::size_t> active_;
  double clock_ms_ = 0.0;
  std::uint64_t steps_ = 0;
  std::vector<OccupancySample> occupancy_;
};

}  // namespace

ServingReport run_serving_sim(const Workload& workload, BatchPolicy policy, const CostModel& cost,
                              bool stationary, std::uint64_t seed) {
  workload.validate();
  cost.validate();
  Simulator sim(workload, cost, stationary, seed);
  sim.run(policy);

  ServingReport report;
  report.policy = policy;
  report.batch = workload.max_batch;
  report.stationary = stationary;
  report.steps = sim.steps();
  report.occupancy = std::move(sim.occupancy());
  double tps_sum = 0.0, tpf_sum = 0.0;
  for (Request& r : sim.requests()) {
    RequestStats& s = r.stats;
    const double span_ms = s.finish_ms - s.arrival_ms;
    s.tokens_per_second = span_ms > 0.0 ? 1000.0 * static_cast<double>(s.tokens) / span_ms : 0.0;
    report.total_tokens += s.tokens;
    report.makespan_ms = std::max(report.makespan_ms, s.finish_ms);
    tps_sum += s.tokens_per_second;
    tpf_sum += static_cast<double>(s.tokens) / static_cast<double>(s.forwards);
    report.requests.push_back(s);
  }
  const double n = static_cast<double>(report.requests.size());
  report.mean_request_tps = tps_sum / n;
  report.mean_tpf = tpf_sum / n;
  if (report.makespan_ms > 0.0) {
    report.aggregate_tps = 1000.0 * static_cast<double>(report.total_tokens) / report.makespan_ms;
  }
  return report;
}

double least_squares_slope(std::span<const ScalingPoint> points) {
  if (points.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (const auto& pt : points) {
    mx += pt.x;
    my += pt.aggregate_tps;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& pt : points) {
    sxy += (pt.x - mx) * (pt.aggregate_tps - my);
    sxx += (pt.x - mx) * (pt.x - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

namespace {

template <typename MakeWorkload>
std::vector<ServingReport> parallel_runs(std::size_t count, MakeWorkload&& make,
                                         BatchPolicy policy, const CostModel& cost,
                                         bool stationary, std::uint64_t seed) {
  std::vector<Workload> workloads;
  for (std::size_t i = 0; i < count; ++i) {
    workloads.push_back(make(i));
    workloads.back().validate();
  }
  cost.validate();
  std::vector<ServingReport> reports(count);
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < count; ++i) {
    workers.emplace_back([&, i] {
      reports[i] = run_serving_sim(workloads[i], policy, cost, stationary, seed);
    });
  }
  for (auto& t : workers) t.join();
  return reports;
}

}  // namespace

ScalingSweep throughput_vs_batch(const Workload& base, std::span<const std::size_t> batch_sizes,
                                 BatchPolicy policy, const CostModel& cost, bool stationary,
                                 std::uint64_t seed) {
  if (!std::is_sorted(batch_sizes.begin(), batch_sizes.end())) {
    throw InvalidInput("throughput_vs_batch: batch sizes must be ascending");
  }
  const auto reports = parallel_runs(
      batch_sizes.size(),
      [&](std::size_t i) {
        Workload w = base;
        w.requests = w.max_batch = batch_sizes[i];
        return w;
      },
      policy, cost, stationary, seed);
  ScalingSweep sweep;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    sweep.points.push_back({static_cast<double>(batch_sizes[i]), reports[i].aggregate_tps});
  }
  sweep.slope = least_squares_slope(sweep.points);
  return sweep;
}

ScalingSweep throughput_vs_tpf(const Workload& base, std::span<const double> acceptance,
                               BatchPolicy policy, const CostModel& cost, bool stationary,
                               std::uint64_t seed) {
  const auto reports = parallel_runs(
      acceptance.size(),
      [&](std::size_t i) {
        Workload w = base;
        w.process.p = acceptance[i];
        return w;
      },
      policy, cost, stationary, seed);
  ScalingSweep sweep;
  for (const auto& r : reports) sweep.points.push_back({r.mean_tpf, r.aggregate_tps});
  sweep.slope = least_squares_slope(sweep.points);
  return sweep;
}

void write_serve_csv(std::ostream& out, std::span<const ServingReport> reports) {
  out << kServeCsvHeader << '\n';
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%s,%.10g,%.10g,%.10g,%.10g\n", to_string(r.policy),
                  r.batch, r.stationary ? "true" : "false", r.aggregate_tps, r.mean_request_tps,
                  r.mean_tpf, r.makespan_ms);
    out << buf;
  }
}

namespace {

using nlohmann::json;

const json& field(const json& obj, const std::string& path, const char* name) {
  if (!obj.contains(name)) throw InvalidConfig(path + ": missing field '" + name + "'");
  return obj.at(name);
}

double number(const json& obj, const std::string& path, const char* name) {
  const json& v = field(obj, path, name);
  if (!v.is_number()) throw InvalidConfig(path + ": field '" + name + "' must be a number");
  return v.get<double>();
}

std::uint64_t count(const json& obj, const std::string& path, const char* name) {
  const json& v = field(obj, path, name);
  if (!v.is_number_unsigned()) {
    throw InvalidConfig(path + ": field '" + name + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string text(const json& obj, const std::string& path, const char* name) {
  const json& v = field(obj, path, name);
  if (!v.is_string()) throw InvalidConfig(path + ": field '" + name + "' must be a string");
  return v.get<std::string>();
}

const json& object(const json& obj, const std::string& path, const char* name) {
  const json& v = field(obj, path, name);
  if (!v.is_object()) throw InvalidConfig(path + ": field '" + name + "' must be an object");
  return v;
}

Workload parse_workload(const json& j, const std::string& path) {
  Workload w;
  w.requests = count(j, path, "requests");
  w.max_batch = count(j, path, "max_batch");
  w.min_output_tokens = count(j, path, "min_output_tokens");
  w.max_output_tokens = count(j, path, "max_output_tokens");

  const std::string arrival_path = path + ".arrival";
  const json& arrival = object(j, path, "arrival");
  const std::string kind = text(arrival, arrival_path, "kind");
  if (kind == "burst") {
    w.arrival.kind = ArrivalKind::kBurst;
  } else if (kind == "poisson") {
    w.arrival.kind = ArrivalKind::kPoisson;
    w.arrival.rate = number(arrival, arrival_path, "rate");
  } else {
    throw InvalidConfig(arrival_path + ": field 'kind' must be \"burst\" or \"poisson\"");
  }

  const std::string process_path = path + ".process";
  const json& process = object(j, path, "process");
  const std::string pkind = text(process, process_path, "kind");
  if (pkind == "isd") {
    w.process.kind = ProcessKind::kIsd;
  } else if (pkind == "sdar") {
    w.process.kind = ProcessKind::kSdar;
  } else if (pkind == "ar") {
    w.process.kind = ProcessKind::kAr;
  } else {
    throw InvalidConfig(process_path + ": field 'kind' must be \"isd\", \"sdar\" or \"ar\"");
  }
  if (w.process.kind != ProcessKind::kAr) {
    w.process.stride = static_cast<int>(count(process, process_path, "N"));
    w.process.p = number(process, process_path, "p");
    if (process.contains("p_spread")) w.process.p_spread = number(process, process_path, "p_spread");
  }
  try {
    w.validate();
  } catch (const InvalidConfig& e) {
    throw InvalidConfig(path + ": " + e.what());
  }
  return w;
}

}  // namespace

ServeConfig serve_config_from_json(const std::string& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("config: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidConfig("config: top level must be an object");
  ServeConfig cfg;
  cfg.seed = count(doc, "config", "seed");
  if (doc.contains("stationary")) {
    if (!doc.at("stationary").is_boolean()) {
      throw InvalidConfig("config: field 'stationary' must be a boolean");
    }
    cfg.stationary = doc.at("stationary").get<bool>();
  }
  if (doc.contains("cost")) {
    const json& c = object(doc, "config", "cost");
    auto opt = [&](const char* name, double& slot) {
      if (c.contains(name)) slot = number(c, "config.cost", name);
    };
    opt("base_ms", cfg.cost.base_ms);
    opt("per_request_ms", cfg.cost.per_request_ms);
    opt("per_query_ms", cfg.cost.per_query_ms);
    opt("knee_tokens", cfg.cost.knee_tokens);
    opt("scheduler_overhead_ms", cfg.cost.scheduler_overhead_ms);
    opt("stationary_overhead_ms", cfg.cost.stationary_overhead_ms);
    cfg.cost.validate();
  }
  const json& runs = field(doc, "config", "runs");
  if (!runs.is_array() || runs.empty()) {
    throw InvalidConfig("config: field 'runs' must be a non-empty array");
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string path = "config.runs[" + std::to_string(i) + "]";
    if (!runs[i].is_object()) throw InvalidConfig(path + ": must be an object");
    ServeRun run;
    try {
      run.policy = parse_batch_policy(text(runs[i], path, "policy"));
    } catch (const InvalidConfig& e) {
      throw InvalidConfig(path + ": field 'policy': " + e.what());
    }
    run.workload = parse_workload(object(runs[i], path, "workload"), path + ".workload");
    cfg.runs.push_back(run);
  }
  return cfg;
}

}  // namespace isd
