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

#ifndef GTA_SAMPLER_H_
#define GTA_SAMPLER_H_

#include <cstdint>
#include <vector>

#include "gta/denoiser.h"
#include "gta/traj_store.h"

namespace gta {

// sigmas[K] = sigma_max > ... > sigmas[1] = sigma_min > sigmas[0] = 0, plus
// the stochastic churn settings used by ReverseSample.
struct NoiseSchedule {
  int num_steps = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double rho = 7.0;
  std::vector<double> sigmas;
  double s_churn = 80.0;
  double s_min = 0.05;
  double s_max = 50.0;
  double s_noise = 1.003;

  // Per-step churn factor min(s_churn / K, sqrt(2) - 1).
  double ChurnGamma() const;
};

NoiseSchedule KarrasSchedule(int num_steps = 128, double sigma_min = 0.002,
                             double sigma_max = 80.0, double rho = 7.0);

inline constexpr double kDefaultGuidanceScale = 2.0;

// (w + 1) D(x; sigma, y) - w D(x; sigma, null), the denoiser-space form of
// the guided score. w = 0 and null conditions skip the extra evaluation.
TrajBatch CfgDenoise(const Denoiser& denoiser, const TrajBatch& x,
                     const std::vector<double>& sigma,
                     const std::vector<Condition>& conditions, double w);

// k = round(mu K), promoted to 1. Throws for mu outside (0, 1].
int NoiseStartIndex(double mu, int num_steps);

struct PartialNoiseResult {
  TrajBatch noised;
  int start_index = 0;
};

// Adds sigmas[k] * N(0, I) to live entries. Sample b draws from rngs[b].
PartialNoiseResult PartialNoise(const TrajBatch& windows, double mu,
                                const NoiseSchedule& schedule,
                                const RowMatrixF& live_mask,
                                std::vector<Rng>& rngs);

// Stochastic second-order sampler from index k to 0. Sample b draws its churn
// noise from rngs[b]. When `finite` is given, samples that turn non-finite
// are flagged there; otherwise a non-finite state throws NumericalError.
TrajBatch ReverseSample(const Denoiser& denoiser, TrajBatch x, int start_index,
                        const NoiseSchedule& schedule,
                        const std::vector<Condition>& conditions, double w,
                        std::vector<Rng>& rngs,
                        std::vector<bool>* finite = nullptr);

struct AugmentConfig {
  double mu = 0.5;
  double alpha = 1.3;
  double w = kDefaultGuidanceScale;
  bool unconditional = false;  // null condition throughout, alpha unused
  double gamma = 1.0;          // discount of the window return
  uint64_t seed = 0;
  int chunk_size = 256;

  void Validate() const;
};

// Condition for amplified guidance: y + (alpha - 1)|y|, which equals
// alpha * y for non-negative returns and moves negative returns toward zero
// by the same relative amount.
double AmplifiedReturn(double y, double alpha);

struct ProvenanceRecord {
  WindowSource source;
  double mu = 0.0;
  double alpha = 0.0;
  double w = 0.0;
  bool unconditional = false;
  double original_return = 0.0;
  double condition = 0.0;  // amplified target; equals original when unconditional
  double realized_return = 0.0;
};

struct AugmentResult {
  std::vector<SubTrajectory> windows;  // environment units
  std::vector<ProvenanceRecord> provenance;
  int64_t rejected = 0;
};

// Partial noising and guided denoising of each window (environment units).
// Window i uses the random stream DeriveSeed(seed, i), so results do not
// depend on chunking.
AugmentResult GtaAugment(const Denoiser& denoiser,
                         const std::vector<SubTrajectory>& windows,
                         const NormStats& stats, const AugmentConfig& config,
                         const NoiseSchedule& schedule);

// Perturbs normalized states and actions with N(0, noise_std^2); rewards and
// window returns are kept. A comparison baseline.
AugmentResult NoiseBaselineAugment(const std::vector<SubTrajectory>& windows,
                                   const NormStats& stats, double noise_std,
                                   uint64_t seed);

// Draws `count` windows with the sampler, seeded by `seed`.
std::vector<SubTrajectory> DrawWindows(const std::vector<SubTrajectory>& windows,
                                       const WindowSampler& sampler,
                                       int64_t count, uint64_t seed);

// Rewards below this value are read as shifted terminals.
inline constexpr float kTerminalDecodeThreshold = -50.0f;

// Each window becomes one episode of H transitions (H + 1 state rows). With
// `decode_terminals`, the first reward below the threshold is shifted back,
// marked terminal, and the window is cut after that transition.
TrajectoryDataset WindowsToTransitions(const std::vector<SubTrajectory>& windows,
                                       bool decode_terminals,
                                       const std::string& env_id);

}  // namespace gta

#endif  // GTA_SAMPLER_H_
