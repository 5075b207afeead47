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

#include "gta/offline_rl.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gta/checkpoint.h"
#include "gta/errors.h"
#include "gta/nn/optim.h"
#include "gta/seeding.h"

namespace gta {
namespace {

using nn::Matrix;
using nn::Scalar;
using nn::Var;

constexpr char kPolicyKind[] = "gta.policy";

struct Critic {
  nn::Mlp q1, q2;
  Critic(int in, int width, std::mt19937_64& rng)
      : q1({in, width, width, 1}, nn::Activation::kRelu, rng),
        q2({in, width, width, 1}, nn::Activation::kRelu, rng) {}
  nn::ParameterList Parameters() const {
    nn::ParameterList p;
    p.Append("q1.", q1.Parameters());
    p.Append("q2.", q2.Parameters());
    return p;
  }
};

}  // namespace

ReplayBuffer BuildReplay(const std::vector<ReplaySource>& sources, uint64_t seed) {
  if (sources.empty()) throw ValidationError("sources", "at least one source required");
  const TrajectoryDataset* first = nullptr;
  double scale = std::numeric_limits<double>::infinity();
  for (const auto& src : sources) {
    if (src.dataset == nullptr) throw ValidationError("sources", "null dataset");
    if (!(src.weight >= 0.0)) throw ConfigError("mix_ratio", "weights must be >= 0");
    if (src.dataset->norm_stats.terminal_encoded) {
      throw ValidationError("terminal_encoded", "decode terminals before building a replay buffer");
    }
    if (src.dataset->normalized) throw ValidationError("normalized", "expected environment units");
    if (first == nullptr) first = src.dataset;
    if (src.dataset->obs_dim != first->obs_dim || src.dataset->act_dim != first->act_dim) {
      throw ValidationError("obs_dim", "sources have different dimensions");
    }
    if (src.weight > 0.0) {
      scale = std::min(scale, static_cast<double>(src.dataset->num_transitions()) / src.weight);
    }
  }
  if (!std::isfinite(scale)) throw ConfigError("mix_ratio", "all weights are zero");

  ReplayBuffer buf;
  buf.obs_dim = first->obs_dim;
  buf.act_dim = first->act_dim;
  struct Pick {
    const TrajectoryDataset* d;
    int64_t row;
  };
  std::vector<Pick> picks;
  for (size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    if (src.weight == 0.0) continue;
    const TrajectoryDataset& d = *src.dataset;
    std::vector<int64_t> rows;
    for (int e = 0; e < d.num_episodes(); ++e) {
      for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r) rows.push_back(r);
    }
    const auto take = static_cast<int64_t>(std::floor(scale * src.weight + 1e-9));
    if (take < static_cast<int64_t>(rows.size())) {
      Rng rng(DeriveSeed(seed, i));
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(take);
      std::sort(rows.begin(), rows.end());
    }
    for (int64_t r : rows) picks.push_back({&d, r});
  }
  if (picks.empty()) throw ValidationError("replay", "no transitions selected");

  const auto n = static_cast<int64_t>(picks.size());
  buf.states.resize(n, buf.obs_dim);
  buf.next_states.resize(n, buf.obs_dim);
  buf.actions.resize(n, buf.act_dim);
  buf.rewards.resize(n);
  buf.dones.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    const auto& [d, r] = picks[i];
    buf.states.row(i) = d->observations.row(r);
    buf.next_states.row(i) = d->observations.row(r + 1);
    buf.actions.row(i) = d->actions.row(r);
    buf.rewards[i] = d->rewards[r];
    buf.dones[i] = d->terminals[r];
  }
  buf.obs_mean.assign(buf.obs_dim, 0.0);
  buf.obs_std.assign(buf.obs_dim, 1.0);
  for (int c = 0; c < buf.obs_dim; ++c) {
    const double mean = buf.states.col(c).cast<double>().mean();
    const double var = (buf.states.col(c).cast<double>().array() - mean).square().mean();
    buf.obs_mean[c] = mean;
    buf.obs_std[c] = std::sqrt(var) < 1e-3 ? 1.0 : std::sqrt(var);
  }
  return buf;
}

void TD3BCConfig::Validate() const {
  if (width < 1) throw ConfigError("width", "must be >= 1");
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("discount", "must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau", "must lie in (0, 1]");
  if (policy_delay < 1) throw ConfigError("policy_delay", "must be >= 1");
  if (!(alpha_bc >= 0.0)) throw ConfigError("alpha_bc", "must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (steps < 0) throw ConfigError("steps", "must be >= 0");
}

Policy::Policy(int obs_dim, int act_dim, int width, uint64_t seed)
    : obs_mean(obs_dim, 0.0), obs_std(obs_dim, 1.0),
      obs_dim_(obs_dim), act_dim_(act_dim), width_(width) {
  std::mt19937_64 rng(seed);
  actor_ = nn::Mlp({obs_dim, width, width, act_dim}, nn::Activation::kRelu, rng);
}

Var Policy::Forward(const Var& normalized_states) const {
  return nn::Tanh(actor_(normalized_states));
}

Matrix Policy::NormalizeStates(const RowMatrixF& states) const {
  Matrix out(states.rows(), states.cols());
  for (Eigen::Index r = 0; r < states.rows(); ++r) {
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
      out(r, c) = static_cast<Scalar>((states(r, c) - obs_mean[c]) / obs_std[c]);
    }
  }
  return out;
}

std::vector<double> Policy::Act(const std::vector<double>& state) const {
  nn::NoGradGuard no_grad;
  Matrix s(1, obs_dim_);
  for (int c = 0; c < obs_dim_; ++c) s(0, c) = static_cast<Scalar>((state[c] - obs_mean[c]) / obs_std[c]);
  const Var a = Forward(nn::Constant(std::move(s)));
  std::vector<double> out(act_dim_);
  for (int c = 0; c < act_dim_; ++c) out[c] = a->value(0, c);
  return out;
}

PointAction Policy::Act(const PointState& state) const {
  const auto a = Act(std::vector<double>(state.begin(), state.end()));
  PointAction out{};
  for (int c = 0; c < kPointMassActDim && c < act_dim_; ++c) out[c] = a[c];
  return out;
}

Policy TrainTD3BC(const ReplayBuffer& replay, const TD3BCConfig& config, TD3BCLog* log) {
  config.Validate();
  if (replay.size() == 0) throw ValidationError("replay", "empty replay buffer");
  const int ds = replay.obs_dim;
  const int da = replay.act_dim;
  std::mt19937_64 init_rng(DeriveSeed(config.seed, 1));
  Policy policy(ds, da, config.width, DeriveSeed(config.seed, 0));
  policy.obs_mean = replay.obs_mean;
  policy.obs_std = replay.obs_std;
  // Policy copies share parameters, so the target is a separate build.
  Policy target_policy(ds, da, config.width, DeriveSeed(config.seed, 0));
  target_policy.obs_mean = replay.obs_mean;
  target_policy.obs_std = replay.obs_std;
  target_policy.Parameters().CopyValuesFrom(policy.Parameters());

  Critic critic(ds + da, config.width, init_rng);
  std::mt19937_64 target_rng(DeriveSeed(config.seed, 1));
  Critic target_critic(ds + da, config.width, target_rng);
  target_critic.Parameters().CopyValuesFrom(critic.Parameters());

  nn::Adam actor_opt(policy.Parameters());
  nn::Adam critic_opt(critic.Parameters());

  const Matrix states = policy.NormalizeStates(replay.states);
  const Matrix next_states = policy.NormalizeStates(replay.next_states);
  const Matrix actions = replay.actions.cast<Scalar>();

  Rng rng(DeriveSeed(config.seed, 2));
  std::uniform_int_distribution<int64_t> pick(0, replay.size() - 1);
  std::normal_distribution<double> gauss(0.0, config.policy_noise);
  const int B = config.batch_size;
  Matrix s(B, ds), s2(B, ds), a(B, da), r(B, 1), not_done(B, 1), noise(B, da);
  double critic_acc = 0.0, actor_acc = 0.0;
  int critic_n = 0, actor_n = 0;

  for (int64_t step = 0; step < config.steps; ++step) {
    for (int b = 0; b < B; ++b) {
      const int64_t i = pick(rng);
      s.row(b) = states.row(i);
      s2.row(b) = next_states.row(i);
      a.row(b) = actions.row(i);
      r(b, 0) = replay.rewards[i];
      not_done(b, 0) = replay.dones[i] ? Scalar(0) : Scalar(1);
      for (int c = 0; c < da; ++c) {
        noise(b, c) = static_cast<Scalar>(
            std::clamp(gauss(rng), -config.noise_clip, config.noise_clip));
      }
    }
    Matrix y;
    {
      nn::NoGradGuard no_grad;
      Matrix next_a = target_policy.Forward(nn::Constant(s2))->value + noise;
      next_a = next_a.cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));
      const Var sa2 = nn::ConcatCols(nn::Constant(s2), nn::Constant(next_a));
      const Matrix q1 = target_critic.q1(sa2)->value;
      const Matrix q2 = target_critic.q2(sa2)->value;
      y = r + static_cast<Scalar>(config.discount) * not_done.cwiseProduct(q1.cwiseMin(q2));
    }
    const Var sa = nn::ConcatCols(nn::Constant(s), nn::Constant(a));
    const Var target = nn::Constant(y);
    const Var critic_loss = nn::Add(nn::MeanSquaredError(critic.q1(sa), target),
                                    nn::MeanSquaredError(critic.q2(sa), target));
    const double cl = critic_loss->value(0, 0);
    if (!std::isfinite(cl)) {
      std::ostringstream msg;
      msg << "critic loss is not finite at step " << step;
      throw NumericalError(msg.str());
    }
    nn::Backward(critic_loss);
    critic_opt.Step(config.critic_lr);
    critic_acc += cl;
    ++critic_n;

    if ((step + 1) % config.policy_delay == 0) {
      const Var pi = policy.Forward(nn::Constant(s));
      const Var q = critic.q1(nn::ConcatCols(nn::Constant(s), pi));
      const double mean_abs_q = q->value.cwiseAbs().mean();
      const double lambda = config.alpha_bc / std::max(mean_abs_q, 1e-6);
      const Var actor_loss = nn::Add(nn::Scale(nn::Mean(q), static_cast<Scalar>(-lambda)),
                                     nn::MeanSquaredError(pi, nn::Constant(a)));
      nn::Backward(actor_loss);
      critic.Parameters().ZeroGrad();
      actor_opt.Step(config.actor_lr);
      actor_acc += actor_loss->value(0, 0);
      ++actor_n;
      const Scalar tau = static_cast<Scalar>(config.tau);
      target_critic.Parameters().SoftUpdateFrom(critic.Parameters(), tau);
      target_policy.Parameters().SoftUpdateFrom(policy.Parameters(), tau);
    }
    if (log != nullptr && (step + 1) % 100 == 0) {
      log->critic_loss.push_back(critic_acc / std::max(critic_n, 1));
      log->actor_loss.push_back(actor_n > 0 ? actor_acc / actor_n : 0.0);
      critic_acc = actor_acc = 0.0;
      critic_n = actor_n = 0;
    }
  }
  return policy;
}

EvalResult EvaluatePolicy(const PointMassEnv& env, const PolicyFn& policy, int n_episodes,
                          uint64_t seed) {
  if (n_episodes < 1) throw ConfigError("episodes", "must be >= 1");
  Rng rng(seed);
  EvalResult out;
  for (int e = 0; e < n_episodes; ++e) {
    PointState s = env.Reset(rng);
    double total = 0.0;
    for (int t = 0; t < env.episode_steps(); ++t) {
      const StepResult step = env.Step(s, policy(s));
      total += step.reward;
      s = step.next_state;
      if (step.done) break;
    }
    out.returns.push_back(total);
  }
  const double n = static_cast<double>(n_episodes);
  out.mean = std::accumulate(out.returns.begin(), out.returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : out.returns) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / n);
  return out;
}

double NormalizedScore(double raw, double random_ref, double expert_ref) {
  if (!(expert_ref > random_ref)) throw ConfigError("expert_ref", "must exceed random_ref");
  return 100.0 * (raw - random_ref) / (expert_ref - random_ref);
}

void SavePolicy(const Policy& policy, const std::filesystem::path& path) {
  nlohmann::ordered_json meta;
  meta["obs_dim"] = policy.obs_dim();
  meta["act_dim"] = policy.act_dim();
  meta["width"] = policy.width();
  meta["obs_mean"] = policy.obs_mean;
  meta["obs_std"] = policy.obs_std;
  WriteParameterArchive(path, kPolicyKind, meta, policy.Parameters());
}

Policy LoadPolicy(const std::filesystem::path& path) {
  const ParameterArchive archive = ReadParameterArchive(path, kPolicyKind);
  const auto& m = archive.metadata;
  Policy policy(m.at("obs_dim").get<int>(), m.at("act_dim").get<int>(), m.at("width").get<int>(), 0);
  policy.obs_mean = m.at("obs_mean").get<std::vector<double>>();
  policy.obs_std = m.at("obs_std").get<std::vector<double>>();
  LoadParameters(archive, policy.Parameters());
  return policy;
}

}  // namespace gta
