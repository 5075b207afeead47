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

#ifndef GTA_DENOISER_H_
#define GTA_DENOISER_H_

#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "gta/nn/layers.h"
#include "gta/traj_store.h"

namespace gta {

// A batch of trajectory tensors stacked row-wise: sample b occupies rows
// [b * steps, (b + 1) * steps). Each row holds one timestep as
// [state | action | reward]; the final timestep's action and reward entries
// are padding and always zero.
using TrajBatch = RowMatrixF;

// Per-sample condition; nullopt selects the unconditional (null) embedding.
using Condition = std::optional<double>;

// Mask with 1 on live entries of one (steps x channels) tensor.
RowMatrixF LiveMask(int steps, int obs_dim, int act_dim);

// Any function D(x; sigma, y) on stacked trajectory tensors.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual int steps() const = 0;
  virtual int channels() const = 0;
  // Entries that carry data; padding stays zero through sampling.
  virtual RowMatrixF LiveEntries() const {
    return RowMatrixF::Ones(steps(), channels());
  }
  // `conditions` are raw window returns (environment reward units).
  virtual TrajBatch Denoise(const TrajBatch& x, const std::vector<double>& sigma,
                            const std::vector<Condition>& conditions) const = 0;
};

// (D(x) - x) / sigma^2 per sample.
TrajBatch ScoreFromDenoiser(const Denoiser& denoiser, const TrajBatch& x,
                            const std::vector<double>& sigma,
                            const std::vector<Condition>& conditions);

struct Preconditioning {
  double c_skip, c_out, c_in, c_noise;
};
Preconditioning ComputePreconditioning(double sigma, double sigma_data);

struct DenoiserConfig {
  int horizon = 16;
  int obs_dim = 0;
  int act_dim = 0;
  int n_blocks = 6;
  int width = 128;
  int time_embed_dim = 32;  // Fourier features of the noise level
  int cond_embed_dim = 32;
  double sigma_data = 1.0;

  int steps() const { return horizon + 1; }
  int channels() const { return obs_dim + act_dim + 1; }
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static DenoiserConfig FromJson(const nlohmann::ordered_json& j);
};

// Maps raw returns to the network's condition input via the training-set
// return range. Values outside the range extrapolate linearly.
struct ConditionScaler {
  double min_return = 0.0;
  double max_return = 1.0;
  double Scale(double y) const;
};

// Time-resolution plan of the U-Net: steps at each encoder level and the
// number of bottleneck blocks.
struct UNetPlan {
  std::vector<int> level_steps;  // level_steps[0] = input steps
  int bottleneck_blocks = 0;
};
UNetPlan PlanUNet(int steps, int n_blocks);

class MixerBlock {
 public:
  MixerBlock() = default;
  MixerBlock(int steps, int width, std::mt19937_64& rng);

  // h: (batch * steps) x width, emb: batch x width.
  nn::Var operator()(const nn::Var& h, const nn::Var& emb, int batch) const;
  nn::ParameterList Parameters() const;

 private:
  int steps_ = 0;
  nn::LayerNormLayer token_norm_, channel_norm_;
  nn::LinearLayer token_in_, token_out_;
  nn::LinearLayer channel_in_, channel_out_;
  nn::LinearLayer embed_proj_;
};

// Trained or freshly initialized conditional denoiser network with
// preconditioning and condition scaling.
class DenoiserHandle : public Denoiser {
 public:
  DenoiserHandle(const DenoiserConfig& config, uint64_t seed);

  int steps() const override { return config_.steps(); }
  int channels() const override { return config_.channels(); }
  RowMatrixF LiveEntries() const override { return mask_; }
  TrajBatch Denoise(const TrajBatch& x, const std::vector<double>& sigma,
                    const std::vector<Condition>& conditions) const override;

  // Network output F(c_in x, c_noise, embed(cond)) on a batch, recording the
  // graph when gradients are enabled. `scaled_cond` entries where `use_null`
  // is set are ignored.
  nn::Var NetworkOutput(const nn::Matrix& x_in, const std::vector<double>& c_noise,
                        const std::vector<double>& scaled_cond,
                        const std::vector<bool>& use_null) const;

  const DenoiserConfig& config() const { return config_; }
  const ConditionScaler& condition_scaler() const { return scaler_; }
  void set_condition_scaler(const ConditionScaler& s) { scaler_ = s; }
  const nn::ParameterList& parameters() const { return parameters_; }
  const RowMatrixF& live_mask() const { return mask_; }

  // Training metadata stored with the checkpoint.
  int64_t trained_steps = 0;
  std::vector<double> loss_log;

 private:
  nn::Var Embedding(const std::vector<double>& c_noise,
                    const std::vector<double>& scaled_cond,
                    const std::vector<bool>& use_null) const;

  DenoiserConfig config_;
  ConditionScaler scaler_;
  UNetPlan plan_;
  RowMatrixF mask_;
  std::vector<double> frequencies_;

  nn::LinearLayer input_proj_, output_proj_;
  nn::LinearLayer time_proj_, cond_in_, cond_out_, embed_out_;
  nn::Var null_embedding_;
  std::vector<MixerBlock> blocks_;
  nn::ParameterList parameters_;
};

void SaveDenoiser(const DenoiserHandle& handle, const std::filesystem::path& path);
DenoiserHandle LoadDenoiser(const std::filesystem::path& path);
// Loads into a handle whose config must match the stored one; a mismatch
// raises ConfigError naming the first differing field.
void LoadDenoiserInto(DenoiserHandle& handle, const std::filesystem::path& path);

// Packs windows (normalized units) into a stacked trajectory batch.
TrajBatch PackWindows(const std::vector<SubTrajectory>& windows, int obs_dim,
                      int act_dim);
// Inverse of PackWindows for one sample; padding entries are dropped.
SubTrajectory UnpackWindow(const TrajBatch& batch, int index, int horizon,
                           int obs_dim, int act_dim);

}  // namespace gta

#endif  // GTA_DENOISER_H_
