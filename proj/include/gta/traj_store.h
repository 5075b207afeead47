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

#ifndef GTA_TRAJ_STORE_H_
#define GTA_TRAJ_STORE_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gta {

using Rng = std::mt19937_64;
using RowMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-dimension z-score statistics. Standard deviations are always > 0.
struct NormStats {
  std::vector<double> obs_mean, obs_std;
  std::vector<double> act_mean, act_std;
  double reward_mean = 0.0;
  double reward_std = 1.0;
  // Set once EncodeTerminals() has shifted terminal rewards.
  bool terminal_encoded = false;
};

// Episode-segmented offline data.
//
// Each episode occupies a contiguous block of rows [begin, end). Row i of an
// episode holds state s_i; rows begin..end-2 are transitions whose action and
// reward live on the same row and whose successor state is row i+1. The final
// row of an episode carries the state reached after the last transition; its
// action and reward entries are zero placeholders. An episode of length L thus
// holds L states and L-1 transitions, and `terminals` may only be set on the
// last transition (row end-2).
struct TrajectoryDataset {
  int obs_dim = 0;
  int act_dim = 0;
  RowMatrixF observations;  // n_total x obs_dim
  RowMatrixF actions;       // n_total x act_dim
  std::vector<float> rewards;
  std::vector<uint8_t> terminals;
  std::vector<uint64_t> episode_offsets;  // start rows, first = 0
  NormStats norm_stats;
  bool normalized = false;
  double gamma_default = 1.0;
  std::string env_id;

  int64_t size() const { return static_cast<int64_t>(rewards.size()); }
  int num_episodes() const { return static_cast<int>(episode_offsets.size()); }
  int64_t episode_begin(int e) const { return episode_offsets[e]; }
  int64_t episode_end(int e) const {
    return e + 1 < num_episodes() ? static_cast<int64_t>(episode_offsets[e + 1])
                                  : size();
  }
  int64_t episode_length(int e) const {
    return episode_end(e) - episode_begin(e);
  }
  // Number of (s, a, r, s') transitions across all episodes.
  int64_t num_transitions() const { return size() - num_episodes(); }
  bool is_transition_row(int64_t row) const;
};

// Throws ValidationError naming the first violated invariant.
void ValidateDataset(const TrajectoryDataset& dataset);

// Recomputes mean/std (std clamped to 1 for constant columns). Observation
// stats use every row; action and reward stats use transition rows only.
NormStats ComputeNormStats(const TrajectoryDataset& dataset);

// Container I/O: a directory holding manifest.json plus little-endian
// float32/uint8/uint64 payload files.
inline constexpr int kContainerFormatVersion = 1;
TrajectoryDataset LoadDataset(const std::filesystem::path& dir);
void SaveDataset(const TrajectoryDataset& dataset,
                 const std::filesystem::path& dir);

// Terminal reward shift used to carry episode termination through generation.
inline constexpr float kTerminalRewardOffset = 100.0f;
TrajectoryDataset EncodeTerminals(const TrajectoryDataset& dataset);
TrajectoryDataset DecodeTerminals(const TrajectoryDataset& dataset);

TrajectoryDataset Normalize(const TrajectoryDataset& dataset);
TrajectoryDataset Denormalize(const TrajectoryDataset& dataset);

// sum_i gamma^i rewards[i]
double WindowReturn(const std::vector<float>& rewards, double gamma);

struct WindowSource {
  int episode = 0;
  int64_t start = 0;  // offset within the episode
};

// A horizon-H slice: H+1 states, H actions and rewards.
struct SubTrajectory {
  RowMatrixF states;   // (H+1) x obs_dim
  RowMatrixF actions;  // H x act_dim
  std::vector<float> rewards;
  WindowSource source;
  double condition_y = 0.0;

  int horizon() const { return static_cast<int>(rewards.size()); }
};

struct SliceStats {
  int skipped_episodes = 0;
};

// Emits every window of H transitions (H+1 states) with the given stride.
// Episodes with fewer than H+1 states are skipped. Throws if no window fits.
std::vector<SubTrajectory> SliceWindows(const TrajectoryDataset& dataset,
                                        int horizon, int stride,
                                        double gamma = 1.0,
                                        SliceStats* stats = nullptr);

SubTrajectory ExtractWindow(const TrajectoryDataset& dataset, int episode,
                            int64_t start, int horizon, double gamma);

void NormalizeWindowInPlace(SubTrajectory& window, const NormStats& stats);
void DenormalizeWindowInPlace(SubTrajectory& window, const NormStats& stats);

enum class ReweightMode { kWindow, kEpisode };

struct ReweightConfig {
  int n_bins = 50;
  double u = 0.001;
  double q = 5.0;
  double sparse_success_weight = 10.0;
  ReweightMode mode = ReweightMode::kWindow;

  void Validate() const;
};

// Bin statistics over window returns.
struct ReturnBins {
  double min_return = 0.0;
  double max_return = 0.0;
  double bin_width = 0.0;
  std::vector<int> counts;
  std::vector<double> midpoints;
  std::vector<double> weights;  // unnormalized v_j
  std::vector<int> bin_of;      // bin index per input return
  bool degenerate = false;      // all returns equal
};

ReturnBins ComputeReturnBins(const std::vector<double>& returns,
                             const ReweightConfig& config);

// Draws window indices either uniformly, by return-bin weights, or by
// per-episode success weights.
class WindowSampler {
 public:
  static WindowSampler Uniform(int64_t n_windows);
  static WindowSampler ByReturn(const std::vector<SubTrajectory>& windows,
                                const ReweightConfig& config);
  static WindowSampler ByEpisode(const std::vector<SubTrajectory>& windows,
                                 const std::vector<bool>& episode_success,
                                 const ReweightConfig& config);

  int64_t Draw(Rng& rng) const;
  const std::vector<std::string>& warnings() const { return warnings_; }
  const ReturnBins& bins() const { return bins_; }

 private:
  enum class Kind { kUniform, kBins, kGroups };
  void BuildCumulative();

  Kind kind_ = Kind::kUniform;
  int64_t n_ = 0;
  ReturnBins bins_;
  // Window indices per bin (kBins) or per episode (kGroups).
  std::vector<std::vector<int64_t>> members_;
  std::vector<double> group_weights_;
  std::vector<double> cumulative_;
  std::vector<std::string> warnings_;
};

struct SampleDraw {
  std::vector<SubTrajectory> windows;
  std::vector<std::string> warnings;
};

SampleDraw ReweightedSample(const TrajectoryDataset& dataset, int horizon,
                            const ReweightConfig& config, int64_t n, Rng& rng,
                            double gamma = 1.0);

SampleDraw ReweightedEpisodeSample(const TrajectoryDataset& dataset,
                                   int horizon, const ReweightConfig& config,
                                   const std::vector<bool>& episode_success,
                                   int64_t n, Rng& rng, double gamma = 1.0);

}  // namespace gta

#endif  // GTA_TRAJ_STORE_H_
