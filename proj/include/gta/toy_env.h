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

#ifndef GTA_TOY_ENV_H_
#define GTA_TOY_ENV_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gta/traj_store.h"

namespace gta {

// Planar point mass: state (px, py, vx, vy), action = force in [-1, 1]^2.
//   pos' = pos + dt * vel
//   vel' = clamp_norm(vel + dt * a, kMaxSpeed)
// Dense reward: -|pos - goal| - 0.05 |a|^2, no terminals.
// Sparse reward: 1 inside a 0.1 radius of the goal (episode terminates).
inline constexpr int kPointMassObsDim = 4;
inline constexpr int kPointMassActDim = 2;
inline constexpr double kPointMassDt = 0.1;
inline constexpr double kPointMassMaxSpeed = 2.0;
inline constexpr int kPointMassEpisodeSteps = 64;
inline constexpr double kPointMassGoalRadius = 0.1;
inline constexpr std::array<double, 2> kPointMassGoal = {1.0, 1.0};

inline constexpr std::string_view kDenseEnvId = "pointmass-dense-v0";
inline constexpr std::string_view kSparseEnvId = "pointmass-sparse-v0";

using PointState = std::array<double, kPointMassObsDim>;
using PointAction = std::array<double, kPointMassActDim>;

enum class RewardKind { kDense, kSparse };

struct StepResult {
  PointState next_state;
  double reward = 0.0;
  bool done = false;
};

// Ground-truth transition f*(s, a). Actions are clipped to [-1, 1].
PointState OracleDynamics(const PointState& s, const PointAction& a);
double OracleReward(RewardKind kind, const PointState& s, const PointAction& a);

class PointMassEnv {
 public:
  explicit PointMassEnv(RewardKind kind) : kind_(kind) {}

  // Throws ConfigError for unknown ids.
  static PointMassEnv FromId(std::string_view env_id);

  RewardKind kind() const { return kind_; }
  std::string id() const;
  int episode_steps() const { return kPointMassEpisodeSteps; }

  // Start position uniform in [-1, 0]^2, zero velocity.
  PointState Reset(Rng& rng) const;
  StepResult Step(const PointState& s, const PointAction& a) const;

  // True if the state is inside the domain where the analytic model applies
  // (speed within 10% of the clamp, position within a generous box).
  static bool InDomain(const PointState& s);

 private:
  RewardKind kind_;
};

enum class DataQuality { kRandom, kMedium, kExpert, kMixed };

DataQuality ParseQuality(std::string_view name);
std::string QualityName(DataQuality quality);

// Scripted behaviour policies.
PointAction RandomPolicy(const PointState& s, Rng& rng);
PointAction MediumPolicy(const PointState& s, Rng& rng);
PointAction ExpertPolicy(const PointState& s, Rng& rng);

struct GenerateOptions {
  // Medium episodes per expert episode in the mixed dataset (1:10 or 1:20).
  int mixed_medium_per_expert = 10;
};

// Behaviour policy of each episode. For kMixed, one expert episode opens
// every block of (medium_per_expert + 1) complete episodes.
std::vector<DataQuality> EpisodePolicies(DataQuality quality, int n_episodes,
                                         const GenerateOptions& options = {});

// Rolls out the behaviour policy for `n_episodes`. Each episode stores its
// states plus the final state row (see TrajectoryDataset).
TrajectoryDataset GenerateDataset(const PointMassEnv& env, DataQuality quality,
                                  int n_episodes, uint64_t seed,
                                  const GenerateOptions& options = {});

// Undiscounted return of each episode (transition rows only).
std::vector<double> EpisodeReturns(const TrajectoryDataset& dataset);
// Episodes that collected a positive reward (sparse success).
std::vector<bool> EpisodeSuccess(const TrajectoryDataset& dataset);

}  // namespace gta

#endif  // GTA_TOY_ENV_H_
