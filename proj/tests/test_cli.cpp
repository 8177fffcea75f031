// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ISD Authors

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result isd(const std::string& args) {
  const std::string cmd = std::string(ISD_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path work(const std::string& name) {
  fs::create_directories(ISD_WORK_DIR);
  const fs::path p = fs::path(ISD_WORK_DIR) / name;
  fs::remove(p);
  return p;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string model_file() {
  const auto path = work("model.json");
  REQUIRE(isd("model --vocab 8 --order 1 --concentration 0.5 --seed 1 --out " + path.string()).code == 0);
  return path.string();
}

}  // namespace

TEST_CASE("mask output byte-matches the golden files") {
  const auto idlm = work("idlm.txt");
  REQUIRE(isd("mask --variant idlm --L 6 --B 2 --out " + idlm.string()).code == 0);
  CHECK(read_file(idlm) == read_file(fs::path(ISD_GOLDEN_DIR) / "mask_idlm_L6_B2.txt"));
  const auto sdar = isd("mask --variant sdar --L 6 --B 2");
  CHECK(sdar.code == 0);
  CHECK(sdar.out == read_file(fs::path(ISD_GOLDEN_DIR) / "mask_sdar_L6_B2.txt"));
}

TEST_CASE("analytics subcommand") {
  const auto fixed = isd("analytics --method isd-fixed --N 4 --break-even");
  CHECK(fixed.code == 0);
  CHECK(std::abs(std::stod(fixed.out) - 0.86) <= 0.01);
  const auto tidar = isd("analytics --method tidar --N 4 --break-even");
  CHECK(tidar.out == "no-crossing\n");
  const auto bad = isd("analytics --method medusa --N 4");
  CHECK(bad.code == 2);
  CHECK(bad.out.find("medusa") != std::string::npos);

  const auto sweep = isd("analytics --method sdar --N 4 --p-min 0 --p-max 1 --p-step 0.01");
  REQUIRE(sweep.code == 0);
  const auto rows = parse_csv(sweep.out);
  REQUIRE(rows.size() == 102);
  CHECK(rows[0][4] == "tpf");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][4]) * std::stod(rows[i][6]) == doctest::Approx(4.0).epsilon(1e-8));
  }
}

TEST_CASE("simulate subcommand") {
  const auto r = isd("simulate --method isd --N 4 --p 0.85 --cycles 1000000 --shards 2");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(std::abs(std::stod(rows[1][4]) - 2.578) <= 0.01);
  CHECK(isd("simulate --method isd --N 4 --p 1.5").code == 2);
  CHECK(isd("simulate --method isd --N 4 --cycles 0").code == 2);
}

TEST_CASE("serve subcommand orders the policies") {
  const auto r = isd(std::string("serve --config ") + ISD_CONFIG_DIR + "/serve_default.json");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  double continuous_isd = 0.0, block_sync = 0.0;
  // Rows follow the config: isd continuous, sdar block-sync, ar continuous.
  REQUIRE(rows.size() == 4);
  CHECK(rows[1][0] == "continuous");
  CHECK(rows[2][0] == "block-sync");
  continuous_isd = std::stod(rows[1][3]);
  block_sync = std::stod(rows[2][3]);
  CHECK(block_sync < continuous_isd);
}

TEST_CASE("decode subcommand") {
  const std::string model = model_file();
  const auto mirror = isd("decode --model " + model + " --prompt 0 --stride 3 --max-new-tokens 4000");
  REQUIRE(mirror.code == 0);
  const auto summary = nlohmann::json::parse(mirror.out);
  CHECK(summary["tpf"].get<double>() >= 2.0);
  CHECK(summary["tpf"].get<double>() <= 3.0);
  CHECK_FALSE(summary.contains("output"));

  double previous = -1.0;
  for (const char* tau : {"0", "0.5"}) {
    const auto r = isd("decode --model " + model +
                       " --prompt 0 --proposal epsilon --epsilon 0.5 --max-new-tokens 2000 --seed 3 --tau " + tau);
    REQUIRE(r.code == 0);
    const double mean = nlohmann::json::parse(r.out)["mean_acceptance"].get<double>();
    CHECK(mean >= previous);
    previous = mean;
  }

  const auto trace = work("empty.jsonl");
  const auto empty = isd("decode --model " + model + " --prompt 0 --max-new-tokens 0 --trace " + trace.string());
  CHECK(empty.code == 0);
  CHECK(nlohmann::json::parse(read_file(trace))["forwards"] == 0);

  const auto lossless = isd("decode --model " + model + " --prompt 0 --proposal gated --lossless");
  CHECK(lossless.code == 0);
  CHECK(isd("decode --model " + model + " --prompt 0 --lossless").code == 2);
  CHECK(isd("decode --model " + model + " --prompt 0 --stride 1").code == 2);
  CHECK(isd("decode --prompt 0").code == 2);
}

TEST_CASE("malformed model files name the field") {
  const auto bad = work("bad.json");
  std::ofstream(bad) << R"({"vocab_size": 3, "order": 1, "rows": {"bos": [0.5, 0.5]}})";
  const auto r = isd("decode --model " + bad.string() + " --prompt 0");
  CHECK(r.code == 1);
  CHECK(r.out.find("rows[\"bos\"]") != std::string::npos);
  const auto missing = isd("decode --model " + (fs::path(ISD_WORK_DIR) / "nope.json").string() + " --prompt 0");
  CHECK(missing.code == 1);
}

TEST_CASE("identical runs give identical files") {
  const std::string model = model_file();
  const auto a = work("a.jsonl"), b = work("b.jsonl");
  for (const auto& p : {a, b}) {
    REQUIRE(isd("decode --model " + model + " --prompt 1,2 --stride 4 --seed 9 --max-new-tokens 300 --trace " +
                p.string()).code == 0);
  }
  CHECK(read_file(a) == read_file(b));
  const auto s1 = work("s1.csv"), s2 = work("s2.csv");
  for (const auto& p : {s1, s2}) {
    REQUIRE(isd("simulate --method sdar --N 4 --p 0.6,0.8 --cycles 50000 --shards 3 --seed 4 --out " +
                p.string()).code == 0);
  }
  CHECK(read_file(s1) == read_file(s2));
  const auto v1 = work("v1.csv"), v2 = work("v2.csv");
  for (const auto& p : {v1, v2}) {
    REQUIRE(isd(std::string("serve --config ") + ISD_CONFIG_DIR + "/serve_default.json --out " + p.string()).code == 0);
  }
  CHECK(read_file(v1) == read_file(v2));
}

TEST_CASE("invalid input leaves no output file") {
  const auto mask = work("ragged.txt");
  CHECK(isd("mask --variant idlm --L 5 --B 2 --out " + mask.string()).code == 2);
  CHECK_FALSE(fs::exists(mask));
  const auto csv = work("never.csv");
  CHECK(isd("simulate --method nope --out " + csv.string()).code == 2);
  CHECK_FALSE(fs::exists(csv));
  const auto bad = work("bad_model.json");
  std::ofstream(bad) << "{";
  const auto trace = work("never.jsonl");
  CHECK(isd("decode --model " + bad.string() + " --prompt 0 --trace " + trace.string()).code == 1);
  CHECK_FALSE(fs::exists(trace));
  const auto cfg = work("bad_cfg.json");
  std::ofstream(cfg) << R"({"seed": 0, "runs": [{"policy": "fifo", "workload": {}}]})";
  const auto serve_out = work("never_serve.csv");
  const auto r = isd("serve --config " + cfg.string() + " --out " + serve_out.string());
  CHECK(r.code == 1);
  CHECK(r.out.find("policy") != std::string::npos);
  CHECK_FALSE(fs::exists(serve_out));
}

TEST_CASE("help and usage exits") {
  CHECK(isd("--help").code == 0);
  CHECK(isd("").code == 2);
  CHECK(isd("mask --bogus").code == 2);
}
