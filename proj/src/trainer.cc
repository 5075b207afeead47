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

#include "gta/trainer.h"

#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "gta/errors.h"
#include "gta/nn/optim.h"

namespace gta {
namespace {

using nn::Matrix;
using nn::Scalar;

RowMatrixF TileMask(const RowMatrixF& mask, int64_t batch) {
  RowMatrixF out(mask.rows() * batch, mask.cols());
  for (int64_t b = 0; b < batch; ++b) out.middleRows(b * mask.rows(), mask.rows()) = mask;
  return out;
}

void CheckDimensions(const DenoiserConfig& c, const TrainingData& data) {
  if (data.horizon != c.horizon) throw ConfigError("horizon", "training windows do not match the denoiser horizon");
  if (data.obs_dim != c.obs_dim) throw ConfigError("obs_dim", "training windows do not match the denoiser");
  if (data.act_dim != c.act_dim) throw ConfigError("act_dim", "training windows do not match the denoiser");
}

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (steps < 0) throw ConfigError("steps", "must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
    throw ConfigError("warmup_fraction", "must lie in [0, 1]");
  }
  if (!(lr_floor >= 0.0)) throw ConfigError("lr_floor", "must be >= 0");
  if (!(cond_dropout >= 0.0 && cond_dropout <= 1.0)) {
    throw ConfigError("cond_dropout", "must lie in [0, 1]");
  }
  if (!(log_sigma_std >= 0.0)) throw ConfigError("log_sigma_std", "must be >= 0");
  if (log_every < 1) throw ConfigError("log_every", "must be >= 1");
}

TrainingData MakeTrainingData(const TrajectoryDataset& dataset, int horizon, double gamma,
                              const std::optional<ReweightConfig>& reweight,
                              const std::vector<bool>& episode_success) {
  if (dataset.normalized) {
    throw ValidationError("normalized", "training data is built from environment-unit datasets");
  }
  std::vector<SubTrajectory> windows = SliceWindows(dataset, horizon, 1, gamma);
  TrainingData data;
  data.horizon = horizon;
  data.obs_dim = dataset.obs_dim;
  data.act_dim = dataset.act_dim;
  if (!reweight) {
    data.sampler = WindowSampler::Uniform(static_cast<int64_t>(windows.size()));
  } else if (reweight->mode == ReweightMode::kWindow) {
    data.sampler = WindowSampler::ByReturn(windows, *reweight);
  } else {
    data.sampler = WindowSampler::ByEpisode(windows, episode_success, *reweight);
  }
  double lo = windows.front().condition_y;
  double hi = lo;
  for (auto& w : windows) {
    lo = std::min(lo, w.condition_y);
    hi = std::max(hi, w.condition_y);
    data.conditions.push_back(w.condition_y);
    data.sources.push_back(w.source);
    NormalizeWindowInPlace(w, dataset.norm_stats);
  }
  data.scaler = {lo, hi};
  data.tensors = PackWindows(windows, dataset.obs_dim, dataset.act_dim);
  return data;
}

TrainingData MakeTrainingData(TrajBatch tensors, std::vector<double> conditions,
                              int horizon, int obs_dim, int act_dim) {
  const int64_t n = static_cast<int64_t>(conditions.size());
  if (tensors.rows() != n * (horizon + 1) || tensors.cols() != obs_dim + act_dim + 1) {
    throw ConfigError("tensors", "shape does not match conditions and dimensions");
  }
  TrainingData data;
  data.horizon = horizon;
  data.obs_dim = obs_dim;
  data.act_dim = act_dim;
  data.tensors = std::move(tensors);
  data.conditions = std::move(conditions);
  data.sources.assign(n, WindowSource{});
  data.sampler = WindowSampler::Uniform(n);
  const auto [lo, hi] = std::minmax_element(data.conditions.begin(), data.conditions.end());
  data.scaler = {*lo, *hi};
  return data;
}

double EstimateSigmaData(const TrajBatch& tensors, const RowMatrixF& live_mask) {
  const int64_t T = live_mask.rows();
  const int64_t n = tensors.rows() / T;
  double ss = 0.0;
  double count = 0.0;
  for (int64_t b = 0; b < n; ++b) {
    const auto block = tensors.middleRows(b * T, T).cast<double>();
    ss += (block.array().square() * live_mask.cast<double>().array()).sum();
    count += live_mask.sum();
  }
  if (count == 0.0) throw ValidationError("tensors", "no live entries");
  return std::sqrt(ss / count);
}

DsmTerms DsmLoss(const Denoiser& denoiser, const TrajBatch& x0,
                 const std::vector<double>& sigma, const TrajBatch& noise,
                 const std::vector<bool>& dropped, const std::vector<double>& conditions,
                 const RowMatrixF& live_mask, double sigma_data) {
  const int64_t batch = static_cast<int64_t>(sigma.size());
  const int64_t T = denoiser.steps();
  if (x0.rows() != batch * T || noise.rows() != x0.rows() || noise.cols() != x0.cols() ||
      static_cast<int64_t>(dropped.size()) != batch ||
      static_cast<int64_t>(conditions.size()) != batch) {
    throw ConfigError("batch", "inconsistent batch shapes");
  }
  TrajBatch noisy(x0.rows(), x0.cols());
  std::vector<Condition> cond(batch);
  for (int64_t b = 0; b < batch; ++b) {
    noisy.middleRows(b * T, T) =
        ((x0.middleRows(b * T, T).cast<double>() + sigma[b] * noise.middleRows(b * T, T).cast<double>())
             .array() *
         live_mask.cast<double>().array())
            .matrix()
            .cast<float>();
    if (!dropped[b]) cond[b] = conditions[b];
  }
  const TrajBatch d = denoiser.Denoise(noisy, sigma, cond);
  DsmTerms terms;
  for (int64_t b = 0; b < batch; ++b) {
    const double sq = ((d.middleRows(b * T, T).cast<double>() - x0.middleRows(b * T, T).cast<double>())
                           .array()
                           .square() *
                       live_mask.cast<double>().array())
                          .sum();
    const double c_out = ComputePreconditioning(sigma[b], sigma_data).c_out;
    terms.unweighted += sq;
    terms.weighted += sq / (c_out * c_out);
  }
  terms.unweighted /= static_cast<double>(batch);
  terms.weighted /= static_cast<double>(batch);
  if (!std::isfinite(terms.weighted)) throw NumericalError("dsm loss is not finite");
  return terms;
}

TrainResult Train(DenoiserHandle& handle, const TrainingData& data,
                  const TrainConfig& config, std::ostream* metrics_log) {
  config.Validate();
  const DenoiserConfig& dc = handle.config();
  CheckDimensions(dc, data);
  if (data.size() == 0) throw ValidationError("windows", "no training windows");
  handle.set_condition_scaler(data.scaler);

  const int B = config.batch_size;
  const int T = dc.steps();
  const int C = dc.channels();
  const RowMatrixF mask_batch = TileMask(handle.live_mask(), B);
  const Matrix weight = mask_batch.cast<Scalar>();
  const int64_t warmup =
      static_cast<int64_t>(std::llround(config.warmup_fraction * static_cast<double>(config.steps)));

  Rng rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution drop(config.cond_dropout);
  nn::Adam adam(handle.parameters(), {.max_grad_norm = config.max_grad_norm});
  std::vector<Matrix> last_good = handle.parameters().SnapshotValues();

  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  double interval_sum = 0.0;
  int interval_count = 0;

  Matrix x_in(static_cast<Eigen::Index>(B) * T, C);
  Matrix target(static_cast<Eigen::Index>(B) * T, C);
  std::vector<double> c_noise(B), cond(B);
  std::vector<bool> use_null(B);

  for (int64_t step = 0; step < config.steps; ++step) {
    const double lr = nn::WarmupCosineLr(step, config.steps, warmup, config.learning_rate,
                                         config.lr_floor);
    for (int b = 0; b < B; ++b) {
      const int64_t idx = data.sampler.Draw(rng);
      const double sigma = std::exp(config.log_sigma_mean + config.log_sigma_std * gauss(rng));
      const Preconditioning pre = ComputePreconditioning(sigma, dc.sigma_data);
      c_noise[b] = pre.c_noise;
      for (int t = 0; t < T; ++t) {
        for (int c = 0; c < C; ++c) {
          const double live = mask_batch(t, c);
          const double x0 = data.tensors(idx * T + t, c);
          const double noisy = (x0 + sigma * gauss(rng)) * live;
          x_in(b * T + t, c) = static_cast<Scalar>(pre.c_in * noisy);
          target(b * T + t, c) = static_cast<Scalar>(live * (x0 - pre.c_skip * noisy) / pre.c_out);
        }
      }
      use_null[b] = drop(rng);
      cond[b] = handle.condition_scaler().Scale(data.conditions[idx]);
    }
    nn::Var f = handle.NetworkOutput(x_in, c_noise, cond, use_null);
    nn::Var loss = nn::WeightedSse(f, target, weight, Scalar(1) / static_cast<Scalar>(B));
    const double value = loss->value(0, 0);
    if (!std::isfinite(value) || value > config.divergence_threshold) {
      handle.parameters().RestoreValues(last_good);
      std::ostringstream msg;
      msg << "training diverged at step " << step << " (loss " << value << ", lr " << lr
          << "); parameters restored to the last logged state";
      throw NumericalError(msg.str());
    }
    nn::Backward(loss);
    adam.Step(lr);
    interval_sum += value;
    ++interval_count;

    if ((step + 1) % config.log_every == 0 || step + 1 == config.steps) {
      TrainLogEntry entry;
      entry.step = step + 1;
      entry.loss = interval_sum / interval_count;
      entry.lr = lr;
      entry.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      result.log.push_back(entry);
      handle.loss_log.push_back(entry.loss);
      if (metrics_log != nullptr) {
        nlohmann::ordered_json j;
        j["step"] = entry.step;
        j["loss"] = entry.loss;
        j["lr"] = entry.lr;
        j["wall_ms"] = entry.wall_ms;
        *metrics_log << j.dump() << '\n';
      }
      interval_sum = 0.0;
      interval_count = 0;
      last_good = handle.parameters().SnapshotValues();
    }
  }
  handle.trained_steps += config.steps;
  return result;
}

double HeldOutLoss(const DenoiserHandle& handle, const TrainingData& data, int n_samples,
                   uint64_t seed) {
  CheckDimensions(handle.config(), data);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int64_t> pick(0, data.size() - 1);
  const int T = handle.steps();
  const int C = handle.channels();
  TrajBatch x0(static_cast<Eigen::Index>(n_samples) * T, C);
  TrajBatch noise(x0.rows(), C);
  std::vector<double> sigma(n_samples), cond(n_samples);
  for (int b = 0; b < n_samples; ++b) {
    const int64_t idx = pick(rng);
    x0.middleRows(static_cast<Eigen::Index>(b) * T, T) = data.tensors.middleRows(idx * T, T);
    sigma[b] = std::exp(-1.2 + 1.2 * gauss(rng));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(T) * C; ++i) {
      noise.middleRows(static_cast<Eigen::Index>(b) * T, T).data()[i] =
          static_cast<float>(gauss(rng));
    }
    cond[b] = data.conditions[idx];
  }
  return DsmLoss(handle, x0, sigma, noise, std::vector<bool>(n_samples, false), cond,
                 handle.live_mask(), handle.config().sigma_data)
      .weighted;
}

}  // namespace gta
