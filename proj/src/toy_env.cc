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

#include "gta/toy_env.h"

#include <algorithm>
#include <cmath>

#include "gta/errors.h"

namespace gta {
namespace {

PointAction Clip(PointAction a) {
  for (double& v : a) v = std::clamp(v, -1.0, 1.0);
  return a;
}

double GoalDistance(const PointState& s) {
  return std::hypot(s[0] - kPointMassGoal[0], s[1] - kPointMassGoal[1]);
}

// controller gains
constexpr double kMediumGain = 1.0;
constexpr double kMediumNoise = 0.5;
constexpr double kExpertGain = 2.0;
constexpr double kExpertDamping = 2.5;
constexpr double kExpertNoise = 0.1;

}  // namespace

PointState OracleDynamics(const PointState& s, const PointAction& a) {
  const PointAction u = Clip(a);
  PointState next;
  next[0] = s[0] + kPointMassDt * s[2];
  next[1] = s[1] + kPointMassDt * s[3];
  double vx = s[2] + kPointMassDt * u[0];
  double vy = s[3] + kPointMassDt * u[1];
  const double speed = std::hypot(vx, vy);
  if (speed > kPointMassMaxSpeed) {
    vx *= kPointMassMaxSpeed / speed;
    vy *= kPointMassMaxSpeed / speed;
  }
  next[2] = vx;
  next[3] = vy;
  return next;
}

double OracleReward(RewardKind kind, const PointState& s, const PointAction& a) {
  const double dist = GoalDistance(s);
  if (kind == RewardKind::kSparse) return dist < kPointMassGoalRadius ? 1.0 : 0.0;
  const PointAction u = Clip(a);
  return -dist - 0.05 * (u[0] * u[0] + u[1] * u[1]);
}

PointMassEnv PointMassEnv::FromId(std::string_view env_id) {
  if (env_id == kDenseEnvId) return PointMassEnv(RewardKind::kDense);
  if (env_id == kSparseEnvId) return PointMassEnv(RewardKind::kSparse);
  throw ConfigError("env", "unknown environment id '" + std::string(env_id) + "'");
}

std::string PointMassEnv::id() const {
  return std::string(kind_ == RewardKind::kDense ? kDenseEnvId : kSparseEnvId);
}

PointState PointMassEnv::Reset(Rng& rng) const {
  std::uniform_real_distribution<double> start(-1.0, 0.0);
  const double px = start(rng);
  const double py = start(rng);
  return {px, py, 0.0, 0.0};
}

StepResult PointMassEnv::Step(const PointState& s, const PointAction& a) const {
  StepResult out;
  out.reward = OracleReward(kind_, s, a);
  out.next_state = OracleDynamics(s, a);
  out.done = kind_ == RewardKind::kSparse && out.reward > 0.0;
  return out;
}

bool PointMassEnv::InDomain(const PointState& s) {
  for (double v : s) {
    if (!std::isfinite(v)) return false;
  }
  return std::hypot(s[2], s[3]) <= 1.1 * kPointMassMaxSpeed &&
         std::abs(s[0]) <= 10.0 && std::abs(s[1]) <= 10.0;
}

DataQuality ParseQuality(std::string_view name) {
  if (name == "random") return DataQuality::kRandom;
  if (name == "medium") return DataQuality::kMedium;
  if (name == "expert") return DataQuality::kExpert;
  if (name == "mixed") return DataQuality::kMixed;
  throw ConfigError("quality", "unknown dataset quality '" + std::string(name) + "'");
}

std::string QualityName(DataQuality quality) {
  switch (quality) {
    case DataQuality::kRandom: return "random";
    case DataQuality::kMedium: return "medium";
    case DataQuality::kExpert: return "expert";
    case DataQuality::kMixed: return "mixed";
  }
  return "unknown";
}

PointAction RandomPolicy(const PointState&, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double ax = u(rng);
  const double ay = u(rng);
  return {ax, ay};
}

PointAction MediumPolicy(const PointState& s, Rng& rng) {
  std::normal_distribution<double> noise(0.0, kMediumNoise);
  const double ax = kMediumGain * (kPointMassGoal[0] - s[0]) + noise(rng);
  const double ay = kMediumGain * (kPointMassGoal[1] - s[1]) + noise(rng);
  return Clip({ax, ay});
}

PointAction ExpertPolicy(const PointState& s, Rng& rng) {
  std::normal_distribution<double> noise(0.0, kExpertNoise);
  const double ax = kExpertGain * (kPointMassGoal[0] - s[0]) -
                    kExpertDamping * s[2] + noise(rng);
  const double ay = kExpertGain * (kPointMassGoal[1] - s[1]) -
                    kExpertDamping * s[3] + noise(rng);
  return Clip({ax, ay});
}

std::vector<DataQuality> EpisodePolicies(DataQuality quality, int n_episodes,
                                         const GenerateOptions& options) {
  if (n_episodes < 1) throw ConfigError("episodes", "must be >= 1");
  if (options.mixed_medium_per_expert < 1) {
    throw ConfigError("mixed_medium_per_expert", "must be >= 1");
  }
  std::vector<DataQuality> out(n_episodes, quality);
  if (quality != DataQuality::kMixed) return out;
  const int period = options.mixed_medium_per_expert + 1;
  for (int e = 0; e < n_episodes; ++e) {
    out[e] = (e % period == 0 && e / period < n_episodes / period) ? DataQuality::kExpert
                                                                   : DataQuality::kMedium;
  }
  return out;
}

TrajectoryDataset GenerateDataset(const PointMassEnv& env, DataQuality quality,
                                  int n_episodes, uint64_t seed,
                                  const GenerateOptions& options) {
  const std::vector<DataQuality> policies = EpisodePolicies(quality, n_episodes, options);
  Rng rng(seed);

  std::vector<PointState> states;
  std::vector<PointAction> actions;
  std::vector<float> rewards;
  std::vector<uint8_t> terminals;
  std::vector<uint64_t> offsets;

  for (int e = 0; e < n_episodes; ++e) {
    const DataQuality q = policies[e];
    offsets.push_back(states.size());
    PointState s = env.Reset(rng);
    for (int t = 0; t < env.episode_steps(); ++t) {
      PointAction a;
      switch (q) {
        case DataQuality::kRandom: a = RandomPolicy(s, rng); break;
        case DataQuality::kMedium: a = MediumPolicy(s, rng); break;
        default: a = ExpertPolicy(s, rng); break;
      }
      const StepResult step = env.Step(s, a);
      states.push_back(s);
      actions.push_back(a);
      rewards.push_back(static_cast<float>(step.reward));
      terminals.push_back(step.done ? 1 : 0);
      s = step.next_state;
      if (step.done) break;
    }
    // final state row
    states.push_back(s);
    actions.push_back({0.0, 0.0});
    rewards.push_back(0.0f);
    terminals.push_back(0);
  }

  TrajectoryDataset d;
  d.obs_dim = kPointMassObsDim;
  d.act_dim = kPointMassActDim;
  const auto n = static_cast<int64_t>(states.size());
  d.observations.resize(n, d.obs_dim);
  d.actions.resize(n, d.act_dim);
  for (int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < d.obs_dim; ++c) d.observations(i, c) = static_cast<float>(states[i][c]);
    for (int c = 0; c < d.act_dim; ++c) d.actions(i, c) = static_cast<float>(actions[i][c]);
  }
  d.rewards = std::move(rewards);
  d.terminals = std::move(terminals);
  d.episode_offsets = std::move(offsets);
  d.env_id = env.id();
  d.gamma_default = 1.0;
  d.norm_stats = ComputeNormStats(d);
  ValidateDataset(d);
  return d;
}

std::vector<double> EpisodeReturns(const TrajectoryDataset& d) {
  std::vector<double> out;
  out.reserve(d.num_episodes());
  for (int e = 0; e < d.num_episodes(); ++e) {
    double total = 0.0;
    for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r) {
      total += d.rewards[r];
    }
    out.push_back(total);
  }
  return out;
}

std::vector<bool> EpisodeSuccess(const TrajectoryDataset& d) {
  std::vector<bool> out(d.num_episodes(), false);
  for (int e = 0; e < d.num_episodes(); ++e) {
    for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r) {
      if (d.terminals[r] || d.rewards[r] > 0.0f) out[e] = true;
    }
  }
  return out;
}

}  // namespace gta
