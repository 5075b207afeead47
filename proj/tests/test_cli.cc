// Copyright 2026 The GTA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.h"
#include "gta/checkpoint.h"
#include "gta/denoiser.h"
#include "gta/seeding.h"
#include "gta/traj_store.h"

namespace gta {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Outcome {
  int code = -1;
  std::string out, err;
};

Outcome Gta(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::Run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

Json ReadJson(const fs::path& p) {
  std::ifstream f(p);
  return Json::parse(f);
}

// Fresh scratch directory per test case.
fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gta_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string S(const fs::path& p) { return p.string(); }

std::string OutputHash(const fs::path& run, const std::string& name) {
  return ReadJson(run / "manifest.json")["outputs"][name]["sha256"].get<std::string>();
}

TEST_CASE("gen-data writes a counted, reproducible container") {
  const auto dir = Scratch("gen");
  REQUIRE(Gta({"gen-data", "--env", "pointmass-dense-v0", "--quality", "medium", "--episodes", "200",
               "--seed", "4", "--out", S(dir / "a")})
              .code == 0);
  const auto d = LoadDataset(dir / "a" / "dataset");
  CHECK(d.num_episodes() == 200);
  CHECK(d.num_transitions() == 200 * 64);
  REQUIRE(Gta({"gen-data", "--episodes", "200", "--seed", "4", "--out", S(dir / "b")}).code == 0);
  CHECK(OutputHash(dir / "a", "dataset") == OutputHash(dir / "b", "dataset"));
  CHECK(Sha256Tree(dir / "a" / "dataset") == OutputHash(dir / "a", "dataset"));
  const auto m = ReadJson(dir / "a" / "manifest.json");
  CHECK(m["command"] == "gen-data");
  CHECK(m["seed"] == 4);
  CHECK(m.contains("wall_time_s"));

  const auto bad = Gta({"gen-data", "--env", "cartpole", "--out", S(dir / "c")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("env") != std::string::npos);
  CHECK(Gta({"gen-data", "--quality", "great", "--out", S(dir / "c")}).code == 2);
}

TEST_CASE("usage errors and help") {
  CHECK(Gta({}).code == 2);
  CHECK(Gta({"bogus"}).code == 2);
  CHECK(Gta({"gen-data"}).code == 2);
  CHECK(Gta({"gen-data", "--episodes", "x", "--out", "y"}).code == 2);
  const auto help = Gta({"augment", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--mu") != std::string::npos);
}

TEST_CASE("config file values sit between defaults and flags") {
  const auto dir = Scratch("config");
  {
    std::ofstream f(dir / "gen.toml");
    f << "[gen-data]\nepisodes = 7\nseed = 3\nquality = \"expert\"\n";
  }
  REQUIRE(Gta({"gen-data", "--config", S(dir / "gen.toml"), "--seed", "9", "--out", S(dir / "run")}).code == 0);
  const auto c = ReadJson(dir / "run" / "manifest.json")["config"];
  CHECK(c["episodes"] == 7);
  CHECK(c["quality"] == "expert");
  CHECK(c["seed"] == 9);
  CHECK(c["env"] == "pointmass-dense-v0");
}

TEST_CASE("train-diffusion, augment and quality") {
  const auto dir = Scratch("pipeline");
  REQUIRE(Gta({"gen-data", "--episodes", "20", "--seed", "1", "--out", S(dir / "gen")}).code == 0);

  SUBCASE("zero steps checkpoints the initial weights with documented defaults") {
    REQUIRE(Gta({"train-diffusion", "--data", S(dir / "gen"), "--steps", "0", "--width", "16",
                 "--seed", "5", "--out", S(dir / "t0")})
                .code == 0);
    const auto c = ReadJson(dir / "t0" / "manifest.json")["config"];
    CHECK(c["denoiser"]["horizon"] == 16);
    CHECK(c["cond_dropout"] == 0.25);
    CHECK(c["reweight"]["n_bins"] == 50);
    CHECK(c["reweight"]["u"] == 0.001);
    CHECK(c["reweight"]["q"] == 5.0);
    const DenoiserHandle stored = LoadDenoiser(dir / "t0" / "denoiser.ckpt");
    const DenoiserHandle fresh(stored.config(), DeriveSeed(5, 0));
    for (size_t i = 0; i < fresh.parameters().size(); ++i) {
      CHECK(stored.parameters()[i].second->value == fresh.parameters()[i].second->value);
    }
    CHECK(Gta({"train-diffusion", "--data", S(dir / "gen"), "--horizon", "80", "--steps", "0",
               "--out", S(dir / "t1")})
              .code == 2);
    CHECK(Gta({"train-diffusion", "--data", S(dir / "gen"), "--lambda", "1.5", "--out", S(dir / "t2")})
              .code == 2);
  }

  SUBCASE("augment defaults, validation and reproducibility") {
    const std::vector<std::string> train = {"train-diffusion", "--data", S(dir / "gen"), "--steps", "50",
                                            "--width", "16", "--batch", "16", "--out"};
    auto t = train;
    t.push_back(S(dir / "train"));
    REQUIRE(Gta(t).code == 0);
    CHECK(fs::exists(dir / "train" / "metrics.jsonl"));
    t.back() = S(dir / "train2");
    REQUIRE(Gta(t).code == 0);
    CHECK(OutputHash(dir / "train", "checkpoint") == OutputHash(dir / "train2", "checkpoint"));

    const std::vector<std::string> aug = {"augment", "--ckpt", S(dir / "train"), "--data", S(dir / "gen"),
                                          "--sampling-steps", "16", "--out"};
    auto a = aug;
    a.push_back(S(dir / "aug"));
    REQUIRE(Gta(a).code == 0);
    const auto m = ReadJson(dir / "aug" / "manifest.json");
    CHECK(m["config"]["mu"] == 0.5);
    CHECK(m["config"]["alpha"] == 1.3);
    CHECK(m["config"]["w"] == 2.0);
    CHECK(m["config"]["n_transitions"] == 4 * 20 * 64);
    const auto generated = LoadDataset(dir / "aug" / "dataset");
    CHECK(generated.num_transitions() == 4 * 20 * 64);
    std::ifstream prov(dir / "aug" / "provenance.jsonl");
    int lines = 0;
    for (std::string line; std::getline(prov, line);) ++lines;
    CHECK(lines == 4 * 20 * 64 / 16);
    CHECK(ReadJson(dir / "aug" / "rejections.json")["rejected_nonfinite"] == 0);

    a.back() = S(dir / "aug2");
    REQUIRE(Gta(a).code == 0);
    for (const char* name : {"dataset", "provenance", "rejections"}) {
      CHECK(OutputHash(dir / "aug", name) == OutputHash(dir / "aug2", name));
    }

    auto bad = aug;
    bad.push_back(S(dir / "bad"));
    bad.insert(bad.end() - 2, {"--mu", "0"});
    CHECK(Gta(bad).code == 2);

    // a container whose dimensions differ from the checkpoint
    auto other = LoadDataset(dir / "gen" / "dataset");
    other.obs_dim = 3;
    other.observations = other.observations.leftCols(3).eval();
    other.norm_stats = ComputeNormStats(other);
    SaveDataset(other, dir / "narrow");
    const auto mismatch = Gta({"augment", "--ckpt", S(dir / "train"), "--data", S(dir / "narrow"),
                               "--out", S(dir / "bad2")});
    CHECK(mismatch.code == 2);
    CHECK(mismatch.err.find("obs_dim") != std::string::npos);

    // quality: self comparison has zero novelty and a fixed schema
    REQUIRE(Gta({"quality", "--aug", S(dir / "gen"), "--ref", S(dir / "gen"), "--out", S(dir / "q0")}).code == 0);
    const auto q0 = ReadJson(dir / "q0" / "quality.json");
    CHECK(q0["novelty_joint"] == 0.0);
    std::vector<std::string> keys;
    for (const auto& item : q0.items()) keys.push_back(item.key());
    CHECK(keys == std::vector<std::string>{"dynamic_mse", "dynamic_mse_excluded", "novelty_joint",
                                           "novelty_state", "novelty_action", "oracle_reward_mean",
                                           "pearson_condition_return", "n_evaluated"});
    REQUIRE(Gta({"quality", "--aug", S(dir / "aug"), "--ref", S(dir / "gen"), "--out", S(dir / "q1")}).code == 0);
    const auto q1 = ReadJson(dir / "q1" / "quality.json");
    CHECK(q1["pearson_condition_return"].is_number());
    CHECK(q1["novelty_joint"].get<double>() > 0.0);
    CHECK(Gta({"quality", "--aug", S(dir / "aug"), "--ref", S(dir / "gen"), "--env", "hopper",
               "--out", S(dir / "q2")})
              .code == 2);
  }
}

TEST_CASE("rl and report") {
  const auto dir = Scratch("rl");
  REQUIRE(Gta({"gen-data", "--episodes", "10", "--seed", "1", "--out", S(dir / "medium")}).code == 0);
  REQUIRE(Gta({"gen-data", "--episodes", "10", "--seed", "2", "--quality", "expert", "--out", S(dir / "expert")})
              .code == 0);
  const std::vector<std::string> common = {"--seeds", "4", "--steps", "100", "--width", "16",
                                           "--batch", "32", "--eval-episodes", "3"};
  auto run = [&](std::vector<std::string> head, const std::string& out) {
    head.insert(head.end(), common.begin(), common.end());
    head.push_back("--out");
    head.push_back(S(dir / out));
    return Gta(head).code;
  };
  REQUIRE(run({"rl", "--replay", S(dir / "medium")}, "arm0") == 0);
  REQUIRE(run({"rl", "--replay", S(dir / "medium")}, "arm0b") == 0);
  REQUIRE(run({"rl", "--replay", S(dir / "medium"), S(dir / "expert"), "--mix", "1", "1"}, "arm1") == 0);
  const auto scores = ReadJson(dir / "arm0" / "scores.json");
  CHECK(scores["seeds"].size() == 4);
  CHECK(scores["replay_transitions"] == 640);
  CHECK(ReadJson(dir / "arm1" / "scores.json")["replay_transitions"] == 1280);
  CHECK(OutputHash(dir / "arm0", "scores") == OutputHash(dir / "arm0b", "scores"));

  const auto rep = Gta({"report", "--runs", S(dir / "arm0"), S(dir / "arm1"), "--out", S(dir / "rep")});
  REQUIRE(rep.code == 0);
  const auto report = ReadJson(dir / "rep" / "report.json");
  REQUIRE(report["comparisons"].size() == 1);
  CHECK(report["comparisons"][0].contains("t"));
  CHECK(report["comparisons"][0].contains("p"));

  REQUIRE(Gta({"report", "--runs", S(dir / "arm0"), S(dir / "arm0b"), "--out", S(dir / "same")}).code == 0);
  CHECK(ReadJson(dir / "same" / "report.json")["comparisons"][0]["p"].get<double>() ==
        doctest::Approx(1.0));
  // rerunning from the stored scores alone reproduces the report
  REQUIRE(Gta({"report", "--runs", S(dir / "arm0"), S(dir / "arm1"), "--out", S(dir / "rep2")}).code == 0);
  CHECK(OutputHash(dir / "rep", "report") == OutputHash(dir / "rep2", "report"));

  REQUIRE(Gta({"rl", "--replay", S(dir / "medium"), "--seeds", "1", "--steps", "10", "--width", "8",
               "--batch", "8", "--eval-episodes", "1", "--out", S(dir / "one")})
              .code == 0);
  CHECK(Gta({"report", "--runs", S(dir / "arm0"), S(dir / "one")}).code == 2);
  CHECK(Gta({"rl", "--replay", S(dir / "medium"), "--mix", "1", "2", "--out", S(dir / "x")}).code == 2);
}

}  // namespace
}  // namespace gta
