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

#ifndef GTA_TRAINER_H_
#define GTA_TRAINER_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "gta/denoiser.h"
#include "gta/traj_store.h"

namespace gta {

struct TrainConfig {
  int batch_size = 256;
  int64_t steps = 20000;
  double learning_rate = 3e-4;
  double warmup_fraction = 0.05;
  double lr_floor = 0.0;
  double cond_dropout = 0.25;
  double log_sigma_mean = -1.2;
  double log_sigma_std = 1.2;
  double max_grad_norm = 1.0;  // <= 0 disables clipping
  double divergence_threshold = 1e6;
  int log_every = 100;
  uint64_t seed = 0;

  void Validate() const;
};

// Training windows as stacked normalized tensors with their raw returns.
struct TrainingData {
  int horizon = 0;
  int obs_dim = 0;
  int act_dim = 0;
  TrajBatch tensors;
  std::vector<double> conditions;
  std::vector<WindowSource> sources;
  WindowSampler sampler;
  ConditionScaler scaler;

  int64_t size() const { return static_cast<int64_t>(conditions.size()); }
};

// Slices a dataset (environment units) into normalized training windows.
// With a reweight config the sampler draws windows by return bin (window
// mode) or by episode success (episode mode, needs `episode_success`).
TrainingData MakeTrainingData(const TrajectoryDataset& dataset, int horizon,
                              double gamma,
                              const std::optional<ReweightConfig>& reweight = {},
                              const std::vector<bool>& episode_success = {});

// Training data from prebuilt tensors (sampled uniformly).
TrainingData MakeTrainingData(TrajBatch tensors, std::vector<double> conditions,
                              int horizon, int obs_dim, int act_dim);

// Root-mean-square of the live entries.
double EstimateSigmaData(const TrajBatch& tensors, const RowMatrixF& live_mask);

struct DsmTerms {
  double weighted = 0.0;    // EDM weighting 1 / c_out^2
  double unweighted = 0.0;  // plain squared error
};

// Batch-mean of sum over live entries of ||D(x0 + sigma n) - x0||^2.
// Samples with `dropped` set are evaluated with the null condition.
DsmTerms DsmLoss(const Denoiser& denoiser, const TrajBatch& x0,
                 const std::vector<double>& sigma, const TrajBatch& noise,
                 const std::vector<bool>& dropped,
                 const std::vector<double>& conditions,
                 const RowMatrixF& live_mask, double sigma_data);

struct TrainLogEntry {
  int64_t step = 0;
  double loss = 0.0;  // mean over the logging interval
  double lr = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
};

// Runs config.steps optimizer steps. Log entries go to `metrics_log` as JSON
// lines when given. Divergence restores the last logged parameters and
// throws NumericalError.
TrainResult Train(DenoiserHandle& handle, const TrainingData& data,
                  const TrainConfig& config, std::ostream* metrics_log = nullptr);

// Deterministic DSM loss over `n_samples` windows drawn with `seed`.
double HeldOutLoss(const DenoiserHandle& handle, const TrainingData& data,
                   int n_samples, uint64_t seed);

}  // namespace gta

#endif  // GTA_TRAINER_H_
