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

#ifndef GTA_OFFLINE_RL_H_
#define GTA_OFFLINE_RL_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "gta/nn/layers.h"
#include "gta/toy_env.h"
#include "gta/traj_store.h"

namespace gta {

// Flat transitions. States are stored in environment units; the learner
// normalizes them with `obs_mean` / `obs_std`.
struct ReplayBuffer {
  int obs_dim = 0;
  int act_dim = 0;
  RowMatrixF states;
  RowMatrixF actions;
  std::vector<float> rewards;
  RowMatrixF next_states;
  std::vector<uint8_t> dones;  // a done transition has no successor
  std::vector<double> obs_mean, obs_std;

  int64_t size() const { return static_cast<int64_t>(rewards.size()); }
};

struct ReplaySource {
  const TrajectoryDataset* dataset = nullptr;
  double weight = 1.0;  // relative share in the mix; 0 drops the source
};

// Concatenates sources in proportion to their weights, subsampling without
// replacement so the largest mix that fits is used. Terminal-encoded
// datasets are rejected; decode them first.
ReplayBuffer BuildReplay(const std::vector<ReplaySource>& sources, uint64_t seed);

struct TD3BCConfig {
  int width = 256;
  double discount = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  double alpha_bc = 2.5;
  int batch_size = 1024;
  int64_t steps = 10000;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  uint64_t seed = 0;

  void Validate() const;
};

// Deterministic tanh policy on normalized states.
class Policy {
 public:
  Policy(int obs_dim, int act_dim, int width, uint64_t seed);

  PointAction Act(const PointState& state) const;
  std::vector<double> Act(const std::vector<double>& state) const;
  nn::Var Forward(const nn::Var& normalized_states) const;
  nn::Matrix NormalizeStates(const RowMatrixF& states) const;

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int width() const { return width_; }
  nn::ParameterList Parameters() const { return actor_.Parameters(); }

  std::vector<double> obs_mean, obs_std;

 private:
  int obs_dim_, act_dim_, width_;
  nn::Mlp actor_;
};

struct TD3BCLog {
  std::vector<double> critic_loss;  // per 100 steps
  std::vector<double> actor_loss;
};

// Twin critics, target policy smoothing, delayed actor updates with a
// behaviour-cloning term weighted by alpha_bc / mean|Q|.
Policy TrainTD3BC(const ReplayBuffer& replay, const TD3BCConfig& config,
                  TD3BCLog* log = nullptr);

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<double> returns;
};

using PolicyFn = std::function<PointAction(const PointState&)>;

EvalResult EvaluatePolicy(const PointMassEnv& env, const PolicyFn& policy, int n_episodes,
                          uint64_t seed);

// 100 (raw - random) / (expert - random).
double NormalizedScore(double raw, double random_ref, double expert_ref);

void SavePolicy(const Policy& policy, const std::filesystem::path& path);
Policy LoadPolicy(const std::filesystem::path& path);

}  // namespace gta

#endif  // GTA_OFFLINE_RL_H_
