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

#include "gta/sampler.h"

#include <cmath>
#include <sstream>

#include "gta/errors.h"
#include "gta/seeding.h"

namespace gta {
namespace {

void AddMaskedNoise(TrajBatch& x, int64_t sample, int steps, const RowMatrixF& mask,
                    double scale, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < steps; ++t) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask(t, c) == 0.0f) continue;
      x(sample * steps + t, c) =
          static_cast<float>(x(sample * steps + t, c) + scale * gauss(rng));
    }
  }
}

bool AllFinite(const TrajBatch& x, int64_t sample, int steps) {
  return x.middleRows(sample * steps, steps).allFinite();
}

}  // namespace

double NoiseSchedule::ChurnGamma() const {
  return std::min(s_churn / num_steps, std::sqrt(2.0) - 1.0);
}

NoiseSchedule KarrasSchedule(int num_steps, double sigma_min, double sigma_max, double rho) {
  if (num_steps < 1) throw ConfigError("num_steps", "must be >= 1");
  if (!(sigma_min > 0.0)) throw ConfigError("sigma_min", "must be > 0");
  if (!(sigma_max > sigma_min)) throw ConfigError("sigma_max", "must exceed sigma_min");
  if (!(rho > 0.0)) throw ConfigError("rho", "must be > 0");
  NoiseSchedule s;
  s.num_steps = num_steps;
  s.sigma_min = sigma_min;
  s.sigma_max = sigma_max;
  s.rho = rho;
  s.sigmas.assign(num_steps + 1, 0.0);
  const double hi = std::pow(sigma_max, 1.0 / rho);
  const double lo = std::pow(sigma_min, 1.0 / rho);
  if (num_steps == 1) {
    s.sigmas[1] = sigma_max;
    return s;
  }
  for (int i = num_steps; i >= 1; --i) {
    const double frac = static_cast<double>(num_steps - i) / (num_steps - 1);
    s.sigmas[i] = std::pow(hi + frac * (lo - hi), rho);
  }
  // endpoints exactly
  s.sigmas[num_steps] = sigma_max;
  s.sigmas[1] = sigma_min;
  return s;
}

TrajBatch CfgDenoise(const Denoiser& denoiser, const TrajBatch& x,
                     const std::vector<double>& sigma,
                     const std::vector<Condition>& conditions, double w) {
  if (!(w >= 0.0)) throw ConfigError("w", "guidance scale must be >= 0");
  bool any_conditioned = false;
  for (const auto& c : conditions) any_conditioned = any_conditioned || c.has_value();
  TrajBatch cond = denoiser.Denoise(x, sigma, conditions);
  if (w == 0.0 || !any_conditioned) return cond;
  const std::vector<Condition> null(conditions.size());
  const TrajBatch uncond = denoiser.Denoise(x, sigma, null);
  const int T = denoiser.steps();
  for (size_t b = 0; b < conditions.size(); ++b) {
    if (!conditions[b]) continue;
    const auto rows = static_cast<Eigen::Index>(b) * T;
    cond.middleRows(rows, T) =
        ((w + 1.0) * cond.middleRows(rows, T).cast<double>() -
         w * uncond.middleRows(rows, T).cast<double>())
            .cast<float>();
  }
  return cond;
}

int NoiseStartIndex(double mu, int num_steps) {
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu", "must lie in (0, 1]");
  const int k = static_cast<int>(std::lround(mu * num_steps));
  return std::clamp(k, 1, num_steps);
}

PartialNoiseResult PartialNoise(const TrajBatch& windows, double mu,
                                const NoiseSchedule& schedule, const RowMatrixF& live_mask,
                                std::vector<Rng>& rngs) {
  PartialNoiseResult out;
  out.start_index = NoiseStartIndex(mu, schedule.num_steps);
  out.noised = windows;
  const int T = static_cast<int>(live_mask.rows());
  const double sigma = schedule.sigmas[out.start_index];
  const int64_t n = windows.rows() / T;
  if (static_cast<int64_t>(rngs.size()) != n) throw ConfigError("rngs", "one stream per sample required");
  for (int64_t b = 0; b < n; ++b) AddMaskedNoise(out.noised, b, T, live_mask, sigma, rngs[b]);
  return out;
}

TrajBatch ReverseSample(const Denoiser& denoiser, TrajBatch x, int start_index,
                        const NoiseSchedule& schedule,
                        const std::vector<Condition>& conditions, double w,
                        std::vector<Rng>& rngs, std::vector<bool>* finite) {
  if (start_index < 1 || start_index > schedule.num_steps) {
    throw ConfigError("start_index", "must lie in [1, K]");
  }
  const int T = denoiser.steps();
  const int64_t n = static_cast<int64_t>(conditions.size());
  if (x.rows() != n * T || static_cast<int64_t>(rngs.size()) != n) {
    throw ConfigError("x", "batch does not match conditions and random streams");
  }
  const RowMatrixF mask = denoiser.LiveEntries();
  const double churn = schedule.ChurnGamma();
  std::vector<double> sigma_vec(n);

  for (int i = start_index; i >= 1; --i) {
    const double s = schedule.sigmas[i];
    const double s_next = schedule.sigmas[i - 1];
    const double gamma = (s >= schedule.s_min && s <= schedule.s_max) ? churn : 0.0;
    const double s_hat = s * (1.0 + gamma);
    if (gamma > 0.0) {
      const double extra = schedule.s_noise * std::sqrt(s_hat * s_hat - s * s);
      for (int64_t b = 0; b < n; ++b) AddMaskedNoise(x, b, T, mask, extra, rngs[b]);
    }
    std::fill(sigma_vec.begin(), sigma_vec.end(), s_hat);
    const TrajBatch d_hat = CfgDenoise(denoiser, x, sigma_vec, conditions, w);
    // slope at s_hat, in double to keep the step difference exact-ish
    const Eigen::MatrixXd slope = (x.cast<double>() - d_hat.cast<double>()) / s_hat;
    Eigen::MatrixXd x_next = x.cast<double>() + (s_next - s_hat) * slope;
    if (s_next > 0.0) {
      std::fill(sigma_vec.begin(), sigma_vec.end(), s_next);
      const TrajBatch x_next_f = x_next.cast<float>();
      const TrajBatch d_next = CfgDenoise(denoiser, x_next_f, sigma_vec, conditions, w);
      const Eigen::MatrixXd slope_next =
          (x_next_f.cast<double>() - d_next.cast<double>()) / s_next;
      x_next = x.cast<double>() + (s_next - s_hat) * 0.5 * (slope + slope_next);
    }
    x = x_next.cast<float>();
    if (finite == nullptr && !x.allFinite()) {
      std::ostringstream msg;
      msg << "reverse sampler produced a non-finite state at step " << i << " (sigma " << s
          << ")";
      throw NumericalError(msg.str());
    }
  }
  if (finite != nullptr) {
    finite->assign(n, true);
    for (int64_t b = 0; b < n; ++b) (*finite)[b] = AllFinite(x, b, T);
  }
  return x;
}

void AugmentConfig::Validate() const {
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu", "must lie in (0, 1]");
  if (!std::isfinite(alpha)) throw ConfigError("alpha", "must be finite");
  if (!(w >= 0.0)) throw ConfigError("w", "must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must lie in (0, 1]");
  if (chunk_size < 1) throw ConfigError("chunk_size", "must be >= 1");
}

double AmplifiedReturn(double y, double alpha) { return y + (alpha - 1.0) * std::abs(y); }

AugmentResult GtaAugment(const Denoiser& denoiser, const std::vector<SubTrajectory>& windows,
                         const NormStats& stats, const AugmentConfig& config,
                         const NoiseSchedule& schedule) {
  config.Validate();
  AugmentResult result;
  if (windows.empty()) return result;
  const int H = windows.front().horizon();
  const int obs_dim = static_cast<int>(windows.front().states.cols());
  const int act_dim = static_cast<int>(windows.front().actions.cols());
  if (H + 1 != denoiser.steps() || obs_dim + act_dim + 1 != denoiser.channels()) {
    throw ConfigError("horizon", "windows do not match the denoiser shape");
  }
  const RowMatrixF mask = denoiser.LiveEntries();
  const int64_t n = static_cast<int64_t>(windows.size());

  for (int64_t begin = 0; begin < n; begin += config.chunk_size) {
    const int64_t count = std::min<int64_t>(config.chunk_size, n - begin);
    std::vector<SubTrajectory> chunk(windows.begin() + begin, windows.begin() + begin + count);
    std::vector<Rng> rngs;
    std::vector<Condition> conditions(count);
    for (int64_t i = 0; i < count; ++i) {
      rngs.emplace_back(DeriveSeed(config.seed, static_cast<uint64_t>(begin + i)));
      NormalizeWindowInPlace(chunk[i], stats);
      if (!config.unconditional) {
        conditions[i] = AmplifiedReturn(chunk[i].condition_y, config.alpha);
      }
    }
    const TrajBatch packed = PackWindows(chunk, obs_dim, act_dim);
    PartialNoiseResult noised = PartialNoise(packed, config.mu, schedule, mask, rngs);
    std::vector<bool> finite;
    const TrajBatch generated =
        ReverseSample(denoiser, std::move(noised.noised), noised.start_index, schedule,
                      conditions, config.w, rngs, &finite);
    for (int64_t i = 0; i < count; ++i) {
      if (!finite[i]) {
        ++result.rejected;
        continue;
      }
      SubTrajectory w = UnpackWindow(generated, static_cast<int>(i), H, obs_dim, act_dim);
      DenormalizeWindowInPlace(w, stats);
      w.source = chunk[i].source;
      w.condition_y = WindowReturn(w.rewards, config.gamma);
      ProvenanceRecord rec;
      rec.source = w.source;
      rec.mu = config.mu;
      rec.alpha = config.unconditional ? 1.0 : config.alpha;
      rec.w = config.unconditional ? 0.0 : config.w;
      rec.unconditional = config.unconditional;
      rec.original_return = chunk[i].condition_y;
      rec.condition = conditions[i].value_or(chunk[i].condition_y);
      rec.realized_return = w.condition_y;
      result.windows.push_back(std::move(w));
      result.provenance.push_back(rec);
    }
  }
  return result;
}

AugmentResult NoiseBaselineAugment(const std::vector<SubTrajectory>& windows,
                                   const NormStats& stats, double noise_std, uint64_t seed) {
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std", "must be >= 0");
  AugmentResult result;
  for (size_t i = 0; i < windows.size(); ++i) {
    Rng rng(DeriveSeed(seed, i));
    std::normal_distribution<double> gauss(0.0, noise_std);
    SubTrajectory w = windows[i];
    NormalizeWindowInPlace(w, stats);
    for (Eigen::Index k = 0; k < w.states.size(); ++k) {
      w.states.data()[k] = static_cast<float>(w.states.data()[k] + gauss(rng));
    }
    for (Eigen::Index k = 0; k < w.actions.size(); ++k) {
      w.actions.data()[k] = static_cast<float>(w.actions.data()[k] + gauss(rng));
    }
    DenormalizeWindowInPlace(w, stats);
    ProvenanceRecord rec;
    rec.source = w.source;
    rec.unconditional = true;
    rec.original_return = windows[i].condition_y;
    rec.condition = windows[i].condition_y;
    rec.realized_return = w.condition_y;
    result.windows.push_back(std::move(w));
    result.provenance.push_back(rec);
  }
  return result;
}

std::vector<SubTrajectory> DrawWindows(const std::vector<SubTrajectory>& windows,
                                       const WindowSampler& sampler, int64_t count,
                                       uint64_t seed) {
  Rng rng(seed);
  std::vector<SubTrajectory> out;
  out.reserve(count);
  for (int64_t i = 0; i < count; ++i) out.push_back(windows[sampler.Draw(rng)]);
  return out;
}

TrajectoryDataset WindowsToTransitions(const std::vector<SubTrajectory>& windows,
                                       bool decode_terminals, const std::string& env_id) {
  if (windows.empty()) throw ValidationError("windows", "nothing to convert");
  TrajectoryDataset d;
  d.obs_dim = static_cast<int>(windows.front().states.cols());
  d.act_dim = static_cast<int>(windows.front().actions.cols());
  d.env_id = env_id;
  std::vector<int> lengths;
  int64_t total = 0;
  for (const auto& w : windows) {
    int transitions = w.horizon();
    if (decode_terminals) {
      for (int t = 0; t < w.horizon(); ++t) {
        if (w.rewards[t] < kTerminalDecodeThreshold) {
          transitions = t + 1;
          break;
        }
      }
    }
    lengths.push_back(transitions);
    total += transitions + 1;
  }
  d.observations.resize(total, d.obs_dim);
  d.actions = RowMatrixF::Zero(total, d.act_dim);
  d.rewards.assign(total, 0.0f);
  d.terminals.assign(total, 0);
  int64_t row = 0;
  for (size_t i = 0; i < windows.size(); ++i) {
    const SubTrajectory& w = windows[i];
    const int L = lengths[i];
    d.episode_offsets.push_back(static_cast<uint64_t>(row));
    d.observations.middleRows(row, L + 1) = w.states.topRows(L + 1);
    d.actions.middleRows(row, L) = w.actions.topRows(L);
    for (int t = 0; t < L; ++t) {
      float r = w.rewards[t];
      if (decode_terminals && r < kTerminalDecodeThreshold) {
        r += kTerminalRewardOffset;
        d.terminals[row + t] = 1;
      }
      d.rewards[row + t] = r;
    }
    row += L + 1;
  }
  d.norm_stats = ComputeNormStats(d);
  ValidateDataset(d);
  return d;
}

}  // namespace gta
