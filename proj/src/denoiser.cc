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

#include "gta/denoiser.h"

#include <algorithm>
#include <cmath>

#include "gta/checkpoint.h"
#include "gta/errors.h"

namespace gta {
namespace {

using nn::Matrix;
using nn::Scalar;
using nn::Var;
using Json = nlohmann::ordered_json;

constexpr char kDenoiserKind[] = "gta.denoiser";
constexpr int kInferenceChunk = 16;

int TokenHidden(int steps) { return std::max(8, 2 * steps); }

}  // namespace

RowMatrixF LiveMask(int steps, int obs_dim, int act_dim) {
  RowMatrixF mask = RowMatrixF::Ones(steps, obs_dim + act_dim + 1);
  mask.block(steps - 1, obs_dim, 1, act_dim + 1).setZero();
  return mask;
}

TrajBatch ScoreFromDenoiser(const Denoiser& denoiser, const TrajBatch& x,
                            const std::vector<double>& sigma,
                            const std::vector<Condition>& conditions) {
  TrajBatch d = denoiser.Denoise(x, sigma, conditions);
  const int steps = denoiser.steps();
  for (size_t b = 0; b < sigma.size(); ++b) {
    const auto rows = d.middleRows(static_cast<Eigen::Index>(b) * steps, steps);
    const auto xr = x.middleRows(static_cast<Eigen::Index>(b) * steps, steps);
    d.middleRows(static_cast<Eigen::Index>(b) * steps, steps) =
        ((rows - xr).cast<double>() / (sigma[b] * sigma[b])).cast<float>();
  }
  return d;
}

Preconditioning ComputePreconditioning(double sigma, double sigma_data) {
  const double s2 = sigma * sigma;
  const double d2 = sigma_data * sigma_data;
  const double root = std::sqrt(s2 + d2);
  return {d2 / (s2 + d2), sigma * sigma_data / root, 1.0 / root, std::log(sigma) / 4.0};
}

void DenoiserConfig::Validate() const {
  if (horizon < 1) throw ConfigError("horizon", "must be >= 1");
  if (obs_dim < 1) throw ConfigError("obs_dim", "must be >= 1");
  if (act_dim < 0) throw ConfigError("act_dim", "must be >= 0");
  if (n_blocks < 1) throw ConfigError("n_blocks", "must be >= 1");
  if (width < channels()) throw ConfigError("width", "must be >= state+action+reward channels");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
    throw ConfigError("time_embed_dim", "must be an even number >= 2");
  }
  if (cond_embed_dim < 1) throw ConfigError("cond_embed_dim", "must be >= 1");
  if (!(sigma_data > 0.0) || !std::isfinite(sigma_data)) {
    throw ConfigError("sigma_data", "must be positive and finite");
  }
}

Json DenoiserConfig::ToJson() const {
  Json j;
  j["horizon"] = horizon;
  j["obs_dim"] = obs_dim;
  j["act_dim"] = act_dim;
  j["n_blocks"] = n_blocks;
  j["width"] = width;
  j["time_embed_dim"] = time_embed_dim;
  j["cond_embed_dim"] = cond_embed_dim;
  j["sigma_data"] = sigma_data;
  return j;
}

DenoiserConfig DenoiserConfig::FromJson(const Json& j) {
  DenoiserConfig c;
  try {
    c.horizon = j.at("horizon").get<int>();
    c.obs_dim = j.at("obs_dim").get<int>();
    c.act_dim = j.at("act_dim").get<int>();
    c.n_blocks = j.at("n_blocks").get<int>();
    c.width = j.at("width").get<int>();
    c.time_embed_dim = j.at("time_embed_dim").get<int>();
    c.cond_embed_dim = j.at("cond_embed_dim").get<int>();
    c.sigma_data = j.at("sigma_data").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", e.what());
  }
  return c;
}

double ConditionScaler::Scale(double y) const {
  const double range = max_return - min_return;
  return range > 0.0 ? (y - min_return) / range : y - min_return;
}

UNetPlan PlanUNet(int steps, int n_blocks) {
  UNetPlan plan;
  plan.level_steps.push_back(steps);
  const int max_depth = (n_blocks - 1) / 2;
  while (static_cast<int>(plan.level_steps.size()) - 1 < max_depth &&
         (plan.level_steps.back() + 1) / 2 >= 2) {
    plan.level_steps.push_back((plan.level_steps.back() + 1) / 2);
  }
  const int depth = static_cast<int>(plan.level_steps.size()) - 1;
  plan.bottleneck_blocks = n_blocks - 2 * depth;
  return plan;
}

MixerBlock::MixerBlock(int steps, int width, std::mt19937_64& rng)
    : steps_(steps),
      token_norm_(width),
      channel_norm_(width),
      token_in_(steps, TokenHidden(steps), rng),
      token_out_(TokenHidden(steps), steps, rng),
      channel_in_(width, 2 * width, rng),
      channel_out_(2 * width, width, rng),
      embed_proj_(width, width, rng) {}

Var MixerBlock::operator()(const Var& h, const Var& emb, int batch) const {
  // temporal mixing: each channel sees the whole window
  Var t = nn::TransposeBlocks(token_norm_(h), batch);
  t = token_out_(nn::SiLU(token_in_(t)));
  Var x = nn::Add(h, nn::TransposeBlocks(t, batch));
  // per-timestep channel mixing, conditioned on the embedding
  Var e = nn::BroadcastBlocks(embed_proj_(emb), steps_);
  Var c = channel_norm_(nn::Add(x, e));
  c = channel_out_(nn::SiLU(channel_in_(c)));
  return nn::Add(x, c);
}

nn::ParameterList MixerBlock::Parameters() const {
  nn::ParameterList p;
  p.Append("token_norm.", token_norm_.Parameters());
  p.Append("token_in.", token_in_.Parameters());
  p.Append("token_out.", token_out_.Parameters());
  p.Append("channel_norm.", channel_norm_.Parameters());
  p.Append("channel_in.", channel_in_.Parameters());
  p.Append("channel_out.", channel_out_.Parameters());
  p.Append("embed_proj.", embed_proj_.Parameters());
  return p;
}

DenoiserHandle::DenoiserHandle(const DenoiserConfig& config, uint64_t seed)
    : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  const int w = config_.width;
  const int half = config_.time_embed_dim / 2;
  plan_ = PlanUNet(config_.steps(), config_.n_blocks);
  mask_ = LiveMask(config_.steps(), config_.obs_dim, config_.act_dim);
  for (int k = 0; k < half; ++k) {
    const double frac = half > 1 ? static_cast<double>(k) / (half - 1) : 0.0;
    frequencies_.push_back(std::exp(frac * std::log(64.0)));
  }

  input_proj_ = nn::LinearLayer(config_.channels(), w, rng);
  time_proj_ = nn::LinearLayer(2 * half + 1, w, rng);
  cond_in_ = nn::LinearLayer(1, config_.cond_embed_dim, rng);
  cond_out_ = nn::LinearLayer(config_.cond_embed_dim, w, rng);
  // The conditional branch starts silent, so a model that never sees a
  // condition keeps conditional and null outputs identical.
  cond_out_.ScaleInit(0);
  null_embedding_ = nn::Parameter(Matrix::Zero(1, w));
  embed_out_ = nn::LinearLayer(w, w, rng);

  const int depth = static_cast<int>(plan_.level_steps.size()) - 1;
  for (int l = 0; l < depth; ++l) blocks_.emplace_back(plan_.level_steps[l], w, rng);
  for (int b = 0; b < plan_.bottleneck_blocks; ++b) {
    blocks_.emplace_back(plan_.level_steps[depth], w, rng);
  }
  for (int l = depth - 1; l >= 0; --l) blocks_.emplace_back(plan_.level_steps[l], w, rng);

  output_proj_ = nn::LinearLayer(w, config_.channels(), rng);
  output_proj_.ScaleInit(0);

  parameters_.Append("input.", input_proj_.Parameters());
  parameters_.Append("time.", time_proj_.Parameters());
  parameters_.Append("cond_in.", cond_in_.Parameters());
  parameters_.Append("cond_out.", cond_out_.Parameters());
  parameters_.Add("null_embedding", null_embedding_);
  parameters_.Append("embed_out.", embed_out_.Parameters());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    parameters_.Append("block" + std::to_string(b) + ".", blocks_[b].Parameters());
  }
  parameters_.Append("output.", output_proj_.Parameters());
}

Var DenoiserHandle::Embedding(const std::vector<double>& c_noise,
                              const std::vector<double>& scaled_cond,
                              const std::vector<bool>& use_null) const {
  const int batch = static_cast<int>(c_noise.size());
  const int half = static_cast<int>(frequencies_.size());
  Matrix features(batch, 2 * half + 1);
  Matrix cond(batch, 1);
  for (int b = 0; b < batch; ++b) {
    features(b, 0) = static_cast<Scalar>(c_noise[b]);
    for (int k = 0; k < half; ++k) {
      const double angle = c_noise[b] * frequencies_[k];
      features(b, 1 + k) = static_cast<Scalar>(std::sin(angle));
      features(b, 1 + half + k) = static_cast<Scalar>(std::cos(angle));
    }
    cond(b, 0) = use_null[b] ? Scalar(0) : static_cast<Scalar>(scaled_cond[b]);
  }
  Var t = time_proj_(nn::Constant(std::move(features)));
  Var c = cond_out_(nn::SiLU(cond_in_(nn::Constant(std::move(cond)))));
  c = nn::SelectRows(c, nn::Constant(Matrix::Zero(1, config_.width)), use_null);
  Var e = nn::Add(nn::Add(t, c), nn::BroadcastBlocks(null_embedding_, batch));
  return embed_out_(nn::SiLU(e));
}

Var DenoiserHandle::NetworkOutput(const Matrix& x_in, const std::vector<double>& c_noise,
                                  const std::vector<double>& scaled_cond,
                                  const std::vector<bool>& use_null) const {
  const int batch = static_cast<int>(c_noise.size());
  if (x_in.rows() != static_cast<Eigen::Index>(batch) * steps() || x_in.cols() != channels()) {
    throw ConfigError("x", "trajectory batch shape does not match the denoiser");
  }
  if (scaled_cond.size() != c_noise.size() || use_null.size() != c_noise.size()) {
    throw ConfigError("conditions", "one condition per sample required");
  }
  Var emb = Embedding(c_noise, scaled_cond, use_null);
  Var h = input_proj_(nn::Constant(x_in));
  const int depth = static_cast<int>(plan_.level_steps.size()) - 1;
  std::vector<Var> skips;
  size_t b = 0;
  for (int l = 0; l < depth; ++l) {
    h = blocks_[b++](h, emb, batch);
    skips.push_back(h);
    h = nn::PoolPairs(h, batch, plan_.level_steps[l]);
  }
  for (int k = 0; k < plan_.bottleneck_blocks; ++k) h = blocks_[b++](h, emb, batch);
  for (int l = depth - 1; l >= 0; --l) {
    h = nn::RepeatPairs(h, batch, plan_.level_steps[l]);
    h = nn::Add(h, skips[l]);
    h = blocks_[b++](h, emb, batch);
  }
  return output_proj_(h);
}

TrajBatch DenoiserHandle::Denoise(const TrajBatch& x, const std::vector<double>& sigma,
                                  const std::vector<Condition>& conditions) const {
  const int T = steps();
  const auto batch = static_cast<int64_t>(sigma.size());
  if (x.rows() != batch * T || x.cols() != channels()) {
    throw ConfigError("x", "trajectory batch shape does not match the denoiser");
  }
  if (static_cast<int64_t>(conditions.size()) != batch) {
    throw ConfigError("conditions", "one condition per sample required");
  }
  for (double s : sigma) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("sigma", "must be positive and finite");
  }
  nn::NoGradGuard no_grad;
  TrajBatch out(x.rows(), x.cols());
  for (int64_t begin = 0; begin < batch; begin += kInferenceChunk) {
    const int64_t n = std::min<int64_t>(kInferenceChunk, batch - begin);
    Matrix x_in(n * T, channels());
    std::vector<double> c_noise(n), cond(n, 0.0);
    std::vector<bool> use_null(n);
    std::vector<Preconditioning> pre(n);
    for (int64_t i = 0; i < n; ++i) {
      pre[i] = ComputePreconditioning(sigma[begin + i], config_.sigma_data);
      c_noise[i] = pre[i].c_noise;
      const Condition& y = conditions[begin + i];
      use_null[i] = !y.has_value();
      if (y) cond[i] = scaler_.Scale(*y);
      x_in.middleRows(i * T, T) =
          (x.middleRows((begin + i) * T, T).cast<double>() * pre[i].c_in).cast<Scalar>();
    }
    Var f = NetworkOutput(x_in, c_noise, cond, use_null);
    for (int64_t i = 0; i < n; ++i) {
      const auto xr = x.middleRows((begin + i) * T, T).cast<double>();
      const auto fr = f->value.middleRows(i * T, T).cast<double>();
      out.middleRows((begin + i) * T, T) =
          ((pre[i].c_skip * xr + pre[i].c_out * fr).cast<float>().array() * mask_.array())
              .matrix();
    }
  }
  return out;
}

namespace {

Json HandleMetadata(const DenoiserHandle& handle) {
  Json meta;
  meta["config"] = handle.config().ToJson();
  meta["condition_scaler"] = {{"min", handle.condition_scaler().min_return},
                              {"max", handle.condition_scaler().max_return}};
  meta["trained_steps"] = handle.trained_steps;
  meta["loss_log"] = handle.loss_log;
  return meta;
}

void ApplyMetadata(DenoiserHandle& handle, const Json& meta) {
  handle.set_condition_scaler({meta.at("condition_scaler").at("min").get<double>(),
                               meta.at("condition_scaler").at("max").get<double>()});
  handle.trained_steps = meta.at("trained_steps").get<int64_t>();
  handle.loss_log = meta.at("loss_log").get<std::vector<double>>();
}

}  // namespace

void SaveDenoiser(const DenoiserHandle& handle, const std::filesystem::path& path) {
  WriteParameterArchive(path, kDenoiserKind, HandleMetadata(handle), handle.parameters());
}

DenoiserHandle LoadDenoiser(const std::filesystem::path& path) {
  const ParameterArchive archive = ReadParameterArchive(path, kDenoiserKind);
  DenoiserHandle handle(DenoiserConfig::FromJson(archive.metadata.at("config")), 0);
  LoadParameters(archive, handle.parameters());
  ApplyMetadata(handle, archive.metadata);
  return handle;
}

void LoadDenoiserInto(DenoiserHandle& handle, const std::filesystem::path& path) {
  const ParameterArchive archive = ReadParameterArchive(path, kDenoiserKind);
  const Json stored = archive.metadata.at("config");
  const Json expected = handle.config().ToJson();
  for (const auto& [key, value] : expected.items()) {
    if (!stored.contains(key) || stored.at(key) != value) {
      throw ConfigError(key, "checkpoint has " + (stored.contains(key) ? stored.at(key).dump() : "nothing") +
                                 ", model expects " + value.dump());
    }
  }
  LoadParameters(archive, handle.parameters());
  ApplyMetadata(handle, archive.metadata);
}

TrajBatch PackWindows(const std::vector<SubTrajectory>& windows, int obs_dim, int act_dim) {
  if (windows.empty()) return TrajBatch(0, obs_dim + act_dim + 1);
  const int H = windows.front().horizon();
  const int T = H + 1;
  TrajBatch out = TrajBatch::Zero(static_cast<Eigen::Index>(windows.size()) * T,
                                  obs_dim + act_dim + 1);
  for (size_t b = 0; b < windows.size(); ++b) {
    const SubTrajectory& w = windows[b];
    if (w.horizon() != H || w.states.cols() != obs_dim || w.actions.cols() != act_dim) {
      throw ConfigError("windows", "all windows must share horizon and dimensions");
    }
    const auto base = static_cast<Eigen::Index>(b) * T;
    out.block(base, 0, T, obs_dim) = w.states;
    out.block(base, obs_dim, H, act_dim) = w.actions;
    for (int t = 0; t < H; ++t) out(base + t, obs_dim + act_dim) = w.rewards[t];
  }
  return out;
}

SubTrajectory UnpackWindow(const TrajBatch& batch, int index, int horizon, int obs_dim,
                           int act_dim) {
  const int T = horizon + 1;
  const auto base = static_cast<Eigen::Index>(index) * T;
  SubTrajectory w;
  w.states = batch.block(base, 0, T, obs_dim);
  w.actions = batch.block(base, obs_dim, horizon, act_dim);
  w.rewards.resize(horizon);
  for (int t = 0; t < horizon; ++t) w.rewards[t] = batch(base + t, obs_dim + act_dim);
  return w;
}

}  // namespace gta
