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

#include "cli.h"

#include <CLI11.hpp>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "gta/checkpoint.h"
#include "gta/denoiser.h"
#include "gta/errors.h"
#include "gta/metrics.h"
#include "gta/offline_rl.h"
#include "gta/sampler.h"
#include "gta/seeding.h"
#include "gta/toy_env.h"
#include "gta/traj_store.h"
#include "gta/trainer.h"

namespace gta::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr char kManifestName[] = "manifest.json";
constexpr char kDatasetDir[] = "dataset";
constexpr char kCheckpointName[] = "denoiser.ckpt";
constexpr char kMetricsName[] = "metrics.jsonl";
constexpr char kProvenanceName[] = "provenance.jsonl";
constexpr char kRejectionsName[] = "rejections.json";
constexpr char kQualityJsonName[] = "quality.json";
constexpr char kQualityTableName[] = "quality.txt";
constexpr char kScoresName[] = "scores.json";
constexpr char kReportName[] = "report.json";

// A run directory path or the container directory itself.
fs::path DatasetPath(const fs::path& path) {
  if (fs::exists(path / kDatasetDir / kManifestName)) return path / kDatasetDir;
  return path;
}

fs::path CheckpointPath(const fs::path& path) {
  return fs::is_directory(path) ? path / kCheckpointName : path;
}

std::string HashPath(const fs::path& path) {
  return fs::is_directory(path) ? Sha256Tree(path) : Sha256File(path);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

Json ReadJson(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError(path.filename().string(), "cannot open " + path.string());
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.filename().string(), e.what());
  }
}

// Sparse-reward data carries termination through generation as a reward
// shift; dense data passes through untouched.
TrajectoryDataset PrepareSource(const TrajectoryDataset& d) {
  const bool any_terminal = std::any_of(d.terminals.begin(), d.terminals.end(),
                                        [](uint8_t t) { return t != 0; });
  return any_terminal ? EncodeTerminals(d) : d;
}

// Collects the manifest of one command run. Output hashes are taken when the
// manifest is written, after every artifact exists.
class RunRecorder {
 public:
  RunRecorder(std::string command, fs::path out)
      : command_(std::move(command)), out_(std::move(out)),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_);
  }

  Json config;

  const fs::path& dir() const { return out_; }

  void Input(const std::string& name, const fs::path& path) {
    inputs_[name] = {{"path", path.string()}, {"sha256", HashPath(path)}};
  }

  void Output(const std::string& name, const std::string& relative) {
    outputs_.emplace_back(name, relative);
  }

  void Write() const {
    Json m;
    m["command"] = command_;
    m["config"] = config;
    m["seed"] = config.contains("seed") ? config["seed"] : Json();
    m["inputs"] = inputs_.empty() ? Json::object() : inputs_;
    Json outs = Json::object();
    for (const auto& [name, rel] : outputs_) {
      outs[name] = {{"path", rel}, {"sha256", HashPath(out_ / rel)}};
    }
    m["outputs"] = outs;
    m["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    WriteText(out_ / kManifestName, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  Json inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

void SaveDatasetFresh(const TrajectoryDataset& d, const fs::path& dir) {
  fs::remove_all(dir);
  SaveDataset(d, dir);
}

Json ProvenanceToJson(const ProvenanceRecord& r) {
  return {{"episode", r.source.episode},       {"start", r.source.start},
          {"mu", r.mu},                         {"alpha", r.alpha},
          {"w", r.w},                           {"unconditional", r.unconditional},
          {"original_return", r.original_return}, {"condition", r.condition},
          {"realized_return", r.realized_return}};
}

ProvenanceRecord ProvenanceFromJson(const Json& j) {
  ProvenanceRecord r;
  r.source.episode = j.at("episode").get<int>();
  r.source.start = j.at("start").get<int64_t>();
  r.mu = j.at("mu").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.w = j.at("w").get<double>();
  r.unconditional = j.at("unconditional").get<bool>();
  r.original_return = j.at("original_return").get<double>();
  r.condition = j.at("condition").get<double>();
  r.realized_return = j.at("realized_return").get<double>();
  return r;
}

std::vector<ProvenanceRecord> ReadProvenance(const fs::path& path) {
  std::vector<ProvenanceRecord> out;
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(ProvenanceFromJson(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(kProvenanceName, e.what());
    }
  }
  return out;
}

ReweightMode ParseReweightMode(const std::string& s) {
  if (s == "window") return ReweightMode::kWindow;
  if (s == "episode") return ReweightMode::kEpisode;
  throw ConfigError("reweight-mode", "expected window or episode");
}

struct ReweightFlags {
  bool enabled = false;
  ReweightConfig config;
  std::string mode = "window";

  void Attach(CLI::App* app) {
    app->add_flag("--reweight", enabled, "Draw windows by return bin (episode success in episode mode)");
    app->add_option("--bins", config.n_bins, "Return bins")->capture_default_str();
    app->add_option("--u", config.u, "Bin weight floor")->capture_default_str();
    app->add_option("--q", config.q, "Bin weight temperature")->capture_default_str();
    app->add_option("--reweight-mode", mode, "window or episode")->capture_default_str();
    app->add_option("--success-weight", config.sparse_success_weight,
                    "Episode-mode weight of successful episodes")
        ->capture_default_str();
  }

  std::optional<ReweightConfig> Resolve() {
    config.mode = ParseReweightMode(mode);
    config.Validate();
    if (!enabled) return std::nullopt;
    return config;
  }

  Json ToJson() const {
    return {{"enabled", enabled}, {"n_bins", config.n_bins}, {"u", config.u},
            {"q", config.q},      {"mode", mode},            {"success_weight", config.sparse_success_weight}};
  }
};

// ---------------------------------------------------------------- gen-data

struct GenDataOptions {
  std::string env{kDenseEnvId};
  std::string quality = "medium";
  int episodes = 200;
  uint64_t seed = 0;
  int mixed_medium_per_expert = GenerateOptions{}.mixed_medium_per_expert;
  std::string out;
};

void RunGenData(const GenDataOptions& o, std::ostream& out) {
  const PointMassEnv env = PointMassEnv::FromId(o.env);
  const DataQuality quality = ParseQuality(o.quality);
  GenerateOptions gen;
  gen.mixed_medium_per_expert = o.mixed_medium_per_expert;
  const TrajectoryDataset d = GenerateDataset(env, quality, o.episodes, o.seed, gen);

  RunRecorder run("gen-data", o.out);
  run.config = {{"env", o.env},
                {"quality", o.quality},
                {"episodes", o.episodes},
                {"mixed_medium_per_expert", o.mixed_medium_per_expert},
                {"seed", o.seed}};
  SaveDatasetFresh(d, run.dir() / kDatasetDir);
  run.Output("dataset", kDatasetDir);
  run.Write();
  out << "gen-data: " << d.num_episodes() << " episodes, " << d.num_transitions()
      << " transitions -> " << (run.dir() / kDatasetDir).string() << "\n";
}

// --------------------------------------------------------- train-diffusion

struct TrainOptions {
  std::string data;
  int horizon = 16;
  int width = DenoiserConfig{}.width;
  int blocks = DenoiserConfig{}.n_blocks;
  TrainConfig train;
  double gamma = 1.0;
  uint64_t seed = 0;
  ReweightFlags reweight;
  std::string out;
};

void RunTrainDiffusion(TrainOptions& o, std::ostream& out) {
  const auto reweight = o.reweight.Resolve();
  const fs::path data_path = DatasetPath(o.data);
  const TrajectoryDataset raw = LoadDataset(data_path);
  const TrajectoryDataset src = PrepareSource(raw);
  const std::vector<bool> success =
      reweight && reweight->mode == ReweightMode::kEpisode ? EpisodeSuccess(raw) : std::vector<bool>{};
  const TrainingData data = MakeTrainingData(src, o.horizon, o.gamma, reweight, success);

  DenoiserConfig config;
  config.horizon = o.horizon;
  config.obs_dim = src.obs_dim;
  config.act_dim = src.act_dim;
  config.width = o.width;
  config.n_blocks = o.blocks;
  config.sigma_data = EstimateSigmaData(data.tensors, LiveMask(o.horizon + 1, src.obs_dim, src.act_dim));
  config.Validate();
  o.train.seed = DeriveSeed(o.seed, 1);
  o.train.Validate();

  RunRecorder run("train-diffusion", o.out);
  run.Input("data", data_path);
  run.config = {{"denoiser", config.ToJson()},
                {"steps", o.train.steps},
                {"batch_size", o.train.batch_size},
                {"learning_rate", o.train.learning_rate},
                {"warmup_fraction", o.train.warmup_fraction},
                {"cond_dropout", o.train.cond_dropout},
                {"max_grad_norm", o.train.max_grad_norm},
                {"log_every", o.train.log_every},
                {"gamma", o.gamma},
                {"terminal_encoded", src.norm_stats.terminal_encoded},
                {"reweight", o.reweight.ToJson()},
                {"training_windows", data.size()},
                {"seed", o.seed}};

  DenoiserHandle handle(config, DeriveSeed(o.seed, 0));
  std::ofstream metrics(run.dir() / kMetricsName, std::ios::binary | std::ios::trunc);
  const TrainResult result = Train(handle, data, o.train, &metrics);
  metrics.close();
  SaveDenoiser(handle, run.dir() / kCheckpointName);
  run.Output("checkpoint", kCheckpointName);
  run.Output("metrics", kMetricsName);
  run.Write();
  out << "train-diffusion: " << data.size() << " windows, " << o.train.steps << " steps";
  if (!result.log.empty()) out << ", final loss " << result.log.back().loss;
  out << " -> " << (run.dir() / kCheckpointName).string() << "\n";
}

// ----------------------------------------------------------------- augment

struct AugmentOptions {
  std::string ckpt;
  std::string data;
  AugmentConfig augment;
  int64_t n_transitions = 0;  // 0 selects 4x the source size
  int sampling_steps = 128;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  uint64_t seed = 0;
  ReweightFlags reweight;
  std::string out;
};

void RunAugment(AugmentOptions& o, std::ostream& out) {
  o.augment.Validate();
  if (o.n_transitions < 0) throw ConfigError("n-transitions", "must be >= 0");
  const auto reweight = o.reweight.Resolve();
  const NoiseSchedule schedule = KarrasSchedule(o.sampling_steps, o.sigma_min, o.sigma_max);

  const fs::path ckpt_path = CheckpointPath(o.ckpt);
  const fs::path data_path = DatasetPath(o.data);
  const DenoiserHandle handle = LoadDenoiser(ckpt_path);
  const TrajectoryDataset raw = LoadDataset(data_path);
  const DenoiserConfig& config = handle.config();
  if (config.obs_dim != raw.obs_dim) throw ConfigError("obs_dim", "checkpoint and data differ");
  if (config.act_dim != raw.act_dim) throw ConfigError("act_dim", "checkpoint and data differ");
  const TrajectoryDataset src = PrepareSource(raw);
  const int H = config.horizon;

  const std::vector<SubTrajectory> windows = SliceWindows(src, H, 1, o.augment.gamma);
  WindowSampler sampler = WindowSampler::Uniform(static_cast<int64_t>(windows.size()));
  if (reweight) {
    sampler = reweight->mode == ReweightMode::kEpisode
                  ? WindowSampler::ByEpisode(windows, EpisodeSuccess(raw), *reweight)
                  : WindowSampler::ByReturn(windows, *reweight);
  }
  const int64_t target = o.n_transitions > 0 ? o.n_transitions : 4 * raw.num_transitions();
  const int64_t n_windows = (target + H - 1) / H;
  const auto picked = DrawWindows(windows, sampler, n_windows, DeriveSeed(o.seed, 0));

  AugmentConfig ac = o.augment;
  ac.seed = DeriveSeed(o.seed, 1);
  const AugmentResult result = GtaAugment(handle, picked, src.norm_stats, ac, schedule);
  if (result.windows.empty()) throw NumericalError("every generated window was non-finite");
  const TrajectoryDataset aug =
      WindowsToTransitions(result.windows, src.norm_stats.terminal_encoded, raw.env_id);

  RunRecorder run("augment", o.out);
  run.Input("checkpoint", ckpt_path);
  run.Input("data", data_path);
  run.config = {{"mu", ac.mu},
                {"alpha", ac.alpha},
                {"w", ac.w},
                {"unconditional", ac.unconditional},
                {"gamma", ac.gamma},
                {"n_transitions", target},
                {"n_windows", n_windows},
                {"sampling_steps", schedule.num_steps},
                {"sigma_min", schedule.sigma_min},
                {"sigma_max", schedule.sigma_max},
                {"s_churn", schedule.s_churn},
                {"s_min", schedule.s_min},
                {"s_max", schedule.s_max},
                {"s_noise", schedule.s_noise},
                {"chunk_size", ac.chunk_size},
                {"reweight", o.reweight.ToJson()},
                {"seed", o.seed}};
  SaveDatasetFresh(aug, run.dir() / kDatasetDir);
  std::ostringstream prov;
  for (const auto& r : result.provenance) prov << ProvenanceToJson(r).dump() << "\n";
  WriteText(run.dir() / kProvenanceName, prov.str());
  const Json rejections = {{"requested_windows", n_windows},
                           {"generated_windows", static_cast<int64_t>(result.windows.size())},
                           {"rejected_nonfinite", result.rejected},
                           {"transitions", aug.num_transitions()}};
  WriteText(run.dir() / kRejectionsName, rejections.dump(2) + "\n");
  run.Output("dataset", kDatasetDir);
  run.Output("provenance", kProvenanceName);
  run.Output("rejections", kRejectionsName);
  run.Write();
  out << "augment: " << result.windows.size() << " windows (" << result.rejected
      << " rejected), " << aug.num_transitions() << " transitions -> "
      << (run.dir() / kDatasetDir).string() << "\n";
}

// ----------------------------------------------------------------- quality

struct QualityOptions {
  std::string aug;
  std::string ref;
  std::string env;
  bool unsquared = false;
  std::string out;
};

void RunQuality(const QualityOptions& o, std::ostream& out) {
  const fs::path aug_path = DatasetPath(o.aug);
  const fs::path ref_path = DatasetPath(o.ref);
  const TrajectoryDataset aug = LoadDataset(aug_path);
  const TrajectoryDataset ref = LoadDataset(ref_path);
  const std::string env = o.env.empty() ? ref.env_id : o.env;
  const EnvOracles oracles = OraclesForEnv(env);
  const fs::path prov_path = fs::path(o.aug) / kProvenanceName;
  const std::vector<ProvenanceRecord> provenance =
      fs::exists(prov_path) ? ReadProvenance(prov_path) : std::vector<ProvenanceRecord>{};
  const QualityReport report = EvaluateQuality(aug, ref, oracles, provenance, !o.unsquared);

  RunRecorder run("quality", o.out);
  run.Input("aug", aug_path);
  run.Input("ref", ref_path);
  if (!provenance.empty()) run.Input("provenance", prov_path);
  run.config = {{"env", env}, {"squared_novelty", !o.unsquared}};
  WriteText(run.dir() / kQualityJsonName, report.ToJson().dump(2) + "\n");
  WriteText(run.dir() / kQualityTableName, report.ToTable());
  run.Output("report", kQualityJsonName);
  run.Output("table", kQualityTableName);
  run.Write();
  out << report.ToTable();
}

// ---------------------------------------------------------------------- rl

struct RlOptions {
  std::vector<std::string> replay;
  std::vector<double> mix;
  int seeds = 4;
  uint64_t seed = 0;
  TD3BCConfig td3bc;
  int eval_episodes = 10;
  uint64_t eval_seed = 1000;
  std::string out;
};

double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = MeanOf(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void RunRl(RlOptions& o, std::ostream& out) {
  if (o.seeds < 1) throw ConfigError("seeds", "must be >= 1");
  if (o.eval_episodes < 1) throw ConfigError("eval-episodes", "must be >= 1");
  if (o.mix.empty()) o.mix.assign(o.replay.size(), 1.0);
  if (o.mix.size() != o.replay.size()) throw ConfigError("mix", "one weight per replay source");
  o.td3bc.Validate();

  std::vector<fs::path> paths;
  std::vector<TrajectoryDataset> datasets;
  for (const auto& r : o.replay) {
    paths.push_back(DatasetPath(r));
    datasets.push_back(LoadDataset(paths.back()));
  }
  std::vector<ReplaySource> sources;
  for (size_t i = 0; i < datasets.size(); ++i) sources.push_back({&datasets[i], o.mix[i]});
  const ReplayBuffer replay = BuildReplay(sources, o.seed);
  const PointMassEnv env = PointMassEnv::FromId(datasets.front().env_id);

  Rng random_rng(DeriveSeed(o.eval_seed, 1));
  const double random_ref =
      EvaluatePolicy(env, [&](const PointState& s) { return RandomPolicy(s, random_rng); },
                     o.eval_episodes, o.eval_seed)
          .mean;
  Rng expert_rng(DeriveSeed(o.eval_seed, 2));
  const double expert_ref =
      EvaluatePolicy(env, [&](const PointState& s) { return ExpertPolicy(s, expert_rng); },
                     o.eval_episodes, o.eval_seed)
          .mean;

  RunRecorder run("rl", o.out);
  for (size_t i = 0; i < paths.size(); ++i) run.Input("replay_" + std::to_string(i), paths[i]);
  run.config = {{"mix", o.mix},
                {"seeds", o.seeds},
                {"width", o.td3bc.width},
                {"discount", o.td3bc.discount},
                {"tau", o.td3bc.tau},
                {"policy_delay", o.td3bc.policy_delay},
                {"policy_noise", o.td3bc.policy_noise},
                {"noise_clip", o.td3bc.noise_clip},
                {"alpha_bc", o.td3bc.alpha_bc},
                {"batch_size", o.td3bc.batch_size},
                {"steps", o.td3bc.steps},
                {"actor_lr", o.td3bc.actor_lr},
                {"critic_lr", o.td3bc.critic_lr},
                {"eval_episodes", o.eval_episodes},
                {"eval_seed", o.eval_seed},
                {"seed", o.seed}};

  Json per_seed = Json::array();
  std::vector<double> means;
  for (int k = 0; k < o.seeds; ++k) {
    TD3BCConfig c = o.td3bc;
    c.seed = DeriveSeed(o.seed, static_cast<uint64_t>(k));
    const Policy policy = TrainTD3BC(replay, c);
    const EvalResult ev = EvaluatePolicy(
        env, [&](const PointState& s) { return policy.Act(s); }, o.eval_episodes, o.eval_seed);
    const std::string name = "policy_seed" + std::to_string(k) + ".ckpt";
    SavePolicy(policy, run.dir() / name);
    run.Output("policy_seed" + std::to_string(k), name);
    means.push_back(ev.mean);
    per_seed.push_back({{"index", k},
                        {"mean", ev.mean},
                        {"std", ev.std},
                        {"normalized", NormalizedScore(ev.mean, random_ref, expert_ref)}});
    out << "rl: seed " << k << " return " << ev.mean << " +- " << ev.std << "\n";
  }
  const Json scores = {{"env", env.id()},
                       {"replay_transitions", replay.size()},
                       {"random_ref", random_ref},
                       {"expert_ref", expert_ref},
                       {"seeds", per_seed},
                       {"mean", MeanOf(means)},
                       {"std", SampleStd(means)},
                       {"normalized_mean", NormalizedScore(MeanOf(means), random_ref, expert_ref)}};
  WriteText(run.dir() / kScoresName, scores.dump(2) + "\n");
  run.Output("scores", kScoresName);
  run.Write();
  out << "rl: mean " << MeanOf(means) << " +- " << SampleStd(means) << " over " << o.seeds
      << " seeds -> " << (run.dir() / kScoresName).string() << "\n";
}

// ------------------------------------------------------------------ report

struct ReportOptions {
  std::vector<std::string> runs;
  std::string out;
};

void RunReport(const ReportOptions& o, std::ostream& out) {
  struct Arm {
    std::string run;
    std::vector<double> returns;
    double mean = 0.0, std = 0.0;
  };
  std::vector<Arm> arms;
  for (const auto& r : o.runs) {
    const Json scores = ReadJson(fs::path(r) / kScoresName);
    Arm arm;
    arm.run = r;
    for (const auto& s : scores.at("seeds")) arm.returns.push_back(s.at("mean").get<double>());
    if (arm.returns.empty()) throw ValidationError("seeds", r + " has no seeds");
    arm.mean = MeanOf(arm.returns);
    arm.std = SampleStd(arm.returns);
    arms.push_back(std::move(arm));
  }
  if (arms.size() > 1) {
    for (const auto& a : arms) {
      if (a.returns.size() < 2) throw ValidationError("seeds", "a t-test needs >= 2 seeds per arm");
    }
  }

  Json report;
  Json arm_json = Json::array();
  std::ostringstream table;
  table << std::left << std::setw(40) << "run" << std::setw(8) << "seeds" << std::setw(14)
        << "mean" << "std\n";
  for (const auto& a : arms) {
    arm_json.push_back(
        {{"run", a.run}, {"seeds", a.returns.size()}, {"mean", a.mean}, {"std", a.std}, {"returns", a.returns}});
    table << std::left << std::setw(40) << a.run << std::setw(8) << a.returns.size()
          << std::setw(14) << a.mean << a.std << "\n";
  }
  report["arms"] = arm_json;
  Json comparisons = Json::array();
  for (size_t i = 1; i < arms.size(); ++i) {
    const WelchResult w = WelchTTest(arms[i].returns, arms[0].returns);
    comparisons.push_back({{"arm", arms[i].run}, {"baseline", arms[0].run}, {"t", w.t}, {"df", w.df}, {"p", w.p}});
    table << arms[i].run << " vs " << arms[0].run << ": t " << w.t << ", df " << w.df << ", p "
          << w.p << "\n";
  }
  report["comparisons"] = comparisons;

  if (!o.out.empty()) {
    RunRecorder run("report", o.out);
    for (size_t i = 0; i < arms.size(); ++i) {
      run.Input("scores_" + std::to_string(i), fs::path(arms[i].run) / kScoresName);
    }
    run.config = {{"runs", o.runs}};
    WriteText(run.dir() / kReportName, report.dump(2) + "\n");
    run.Output("report", kReportName);
    run.Write();
  }
  out << table.str();
}

}  // namespace

void ConfigureAllocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generative trajectory augmentation for offline RL"};
  app.name("gta");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config file with one [subcommand] section; flags take precedence");

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Roll out a scripted policy into a dataset container");
  gen_cmd->add_option("--env", gen.env, "Environment id")->capture_default_str();
  gen_cmd->add_option("--quality", gen.quality, "random, medium, expert or mixed")->capture_default_str();
  gen_cmd->add_option("--episodes", gen.episodes, "Episodes to roll out")->capture_default_str();
  gen_cmd->add_option("--mixed-ratio", gen.mixed_medium_per_expert,
                      "Medium episodes per expert episode in mixed data")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Run seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Run directory")->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train-diffusion", "Train the trajectory denoiser");
  train_cmd->add_option("--data", train.data, "Dataset container or gen-data run")->required();
  train_cmd->add_option("--horizon", train.horizon, "Transitions per window")->capture_default_str();
  train_cmd->add_option("--steps", train.train.steps, "Optimizer steps")->capture_default_str();
  train_cmd->add_option("--batch", train.train.batch_size, "Windows per batch")->capture_default_str();
  train_cmd->add_option("--lr", train.train.learning_rate, "Peak learning rate")->capture_default_str();
  train_cmd->add_option("--lambda", train.train.cond_dropout, "Condition dropout probability")
      ->capture_default_str();
  train_cmd->add_option("--width", train.width, "Hidden width")->capture_default_str();
  train_cmd->add_option("--blocks", train.blocks, "Residual mixer blocks")->capture_default_str();
  train_cmd->add_option("--gamma", train.gamma, "Discount of the window-return condition")
      ->capture_default_str();
  train_cmd->add_option("--log-every", train.train.log_every, "Steps per log entry")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "Run seed")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Run directory")->required();
  train.reweight.Attach(train_cmd);

  AugmentOptions aug;
  auto* aug_cmd = app.add_subcommand("augment", "Partially noise and guided-denoise source windows");
  aug_cmd->add_option("--ckpt", aug.ckpt, "Checkpoint file or train-diffusion run")->required();
  aug_cmd->add_option("--data", aug.data, "Source dataset container or gen-data run")->required();
  aug_cmd->add_option("--mu", aug.augment.mu, "Partial noising ratio in (0, 1]")->capture_default_str();
  aug_cmd->add_option("--alpha", aug.augment.alpha, "Return amplification")->capture_default_str();
  aug_cmd->add_option("--w", aug.augment.w, "Guidance scale")->capture_default_str();
  aug_cmd->add_flag("--unconditional", aug.augment.unconditional, "Denoise with the null condition");
  aug_cmd->add_option("--gamma", aug.augment.gamma, "Discount of the window-return condition")
      ->capture_default_str();
  aug_cmd->add_option("--n-transitions", aug.n_transitions,
                      "Transitions to generate; 0 selects 4x the source size")
      ->capture_default_str();
  aug_cmd->add_option("--sampling-steps", aug.sampling_steps, "Noise levels in the schedule")
      ->capture_default_str();
  aug_cmd->add_option("--sigma-min", aug.sigma_min, "Smallest noise level")->capture_default_str();
  aug_cmd->add_option("--sigma-max", aug.sigma_max, "Largest noise level")->capture_default_str();
  aug_cmd->add_option("--chunk", aug.augment.chunk_size, "Windows per denoiser batch")->capture_default_str();
  aug_cmd->add_option("--seed", aug.seed, "Run seed")->capture_default_str();
  aug_cmd->add_option("--out", aug.out, "Run directory")->required();
  aug.reweight.Attach(aug_cmd);

  QualityOptions quality;
  auto* quality_cmd = app.add_subcommand("quality", "Score augmented data against the reference");
  quality_cmd->add_option("--aug", quality.aug, "Augmented dataset or augment run")->required();
  quality_cmd->add_option("--ref", quality.ref, "Reference dataset or gen-data run")->required();
  quality_cmd->add_option("--env", quality.env, "Oracle environment id (default: the reference's)");
  quality_cmd->add_flag("--unsquared", quality.unsquared, "Report novelty as plain distance");
  quality_cmd->add_option("--out", quality.out, "Run directory")->required();

  RlOptions rl;
  auto* rl_cmd = app.add_subcommand("rl", "Train and evaluate TD3+BC over several seeds");
  rl_cmd->add_option("--replay", rl.replay, "Replay sources (datasets or runs)")->required();
  rl_cmd->add_option("--mix", rl.mix, "Relative weight per replay source (default 1 each)");
  rl_cmd->add_option("--seeds", rl.seeds, "Independent training seeds")->capture_default_str();
  rl_cmd->add_option("--seed", rl.seed, "Run seed")->capture_default_str();
  rl_cmd->add_option("--steps", rl.td3bc.steps, "Gradient steps per seed")->capture_default_str();
  rl_cmd->add_option("--width", rl.td3bc.width, "Actor and critic width")->capture_default_str();
  rl_cmd->add_option("--batch", rl.td3bc.batch_size, "Transitions per batch")->capture_default_str();
  rl_cmd->add_option("--alpha-bc", rl.td3bc.alpha_bc, "Behaviour-cloning weight")->capture_default_str();
  rl_cmd->add_option("--discount", rl.td3bc.discount, "Critic discount")->capture_default_str();
  rl_cmd->add_option("--eval-episodes", rl.eval_episodes, "Evaluation rollouts per seed")
      ->capture_default_str();
  rl_cmd->add_option("--eval-seed", rl.eval_seed, "Seed of the evaluation start states")
      ->capture_default_str();
  rl_cmd->add_option("--out", rl.out, "Run directory")->required();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Compare rl runs with a Welch t-test");
  report_cmd->add_option("--runs", report.runs, "rl run directories; the first is the baseline")
      ->required();
  report_cmd->add_option("--out", report.out, "Optional run directory for report.json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) RunGenData(gen, out);
    if (train_cmd->parsed()) RunTrainDiffusion(train, out);
    if (aug_cmd->parsed()) RunAugment(aug, out);
    if (quality_cmd->parsed()) RunQuality(quality, out);
    if (rl_cmd->parsed()) RunRl(rl, out);
    if (report_cmd->parsed()) RunReport(report, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace gta::cli
