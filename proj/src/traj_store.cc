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

#include "gta/traj_store.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "gta/errors.h"

namespace gta {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

template <typename T>
T ByteSwap(T value) {
  auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
void WriteArray(const fs::path& path, const T* data, size_t count) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError(path.string(), "cannot open for writing");
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(T)));
  } else {
    for (size_t i = 0; i < count; ++i) {
      T v = ByteSwap(data[i]);
      out.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
  }
  if (!out) throw ValidationError(path.string(), "write failed");
}

template <typename T>
std::vector<T> ReadArray(const fs::path& path, size_t expected_count,
                         const std::string& field) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw ValidationError(field, "missing file " + path.string());
  const auto bytes = fs::file_size(path, ec);
  if (ec || bytes != expected_count * sizeof(T)) {
    throw ValidationError(
        field, "shape mismatch: manifest implies " +
                   std::to_string(expected_count * sizeof(T)) +
                   " bytes, payload has " + std::to_string(bytes));
  }
  std::vector<T> values(expected_count);
  std::ifstream in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) throw ValidationError(field, "short read");
  if constexpr (std::endian::native != std::endian::little && sizeof(T) > 1) {
    for (auto& v : values) v = ByteSwap(v);
  }
  return values;
}

void ColumnStats(const RowMatrixF& m, const std::vector<int64_t>& rows,
                 std::vector<double>& mean, std::vector<double>& stddev) {
  const int cols = static_cast<int>(m.cols());
  mean.assign(cols, 0.0);
  stddev.assign(cols, 1.0);
  if (rows.empty()) return;
  for (int c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (int64_t r : rows) sum += m(r, c);
    const double mu = sum / static_cast<double>(rows.size());
    double ss = 0.0;
    for (int64_t r : rows) {
      const double d = m(r, c) - mu;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(rows.size()));
    mean[c] = mu;
    // constant channels keep unit scale
    stddev[c] = sd > 1e-8 ? sd : 1.0;
  }
}

Json VecToJson(const std::vector<double>& v) { return Json(v); }

std::vector<double> JsonToVec(const Json& j, const std::string& field,
                              size_t expected) {
  if (!j.is_array() || j.size() != expected) {
    throw ValidationError(field, "expected array of length " +
                                     std::to_string(expected));
  }
  return j.get<std::vector<double>>();
}

}  // namespace

bool TrajectoryDataset::is_transition_row(int64_t row) const {
  auto it = std::upper_bound(episode_offsets.begin(), episode_offsets.end(),
                             static_cast<uint64_t>(row));
  const int e = static_cast<int>(it - episode_offsets.begin()) - 1;
  return row + 1 < episode_end(e);
}

void ValidateDataset(const TrajectoryDataset& d) {
  const int64_t n = d.size();
  if (d.obs_dim <= 0) throw ValidationError("d_s", "must be positive");
  if (d.act_dim <= 0) throw ValidationError("d_a", "must be positive");
  if (d.observations.rows() != n || d.observations.cols() != d.obs_dim) {
    throw ValidationError("observations", "shape mismatch");
  }
  if (d.actions.rows() != n || d.actions.cols() != d.act_dim) {
    throw ValidationError("actions", "shape mismatch");
  }
  if (static_cast<int64_t>(d.terminals.size()) != n) {
    throw ValidationError("terminals", "shape mismatch");
  }
  if (d.episode_offsets.empty() || n == 0) {
    throw ValidationError("episode_offsets", "dataset has no episodes");
  }
  if (d.episode_offsets.front() != 0) {
    throw ValidationError("episode_offsets", "first offset must be 0");
  }
  for (size_t i = 1; i < d.episode_offsets.size(); ++i) {
    if (d.episode_offsets[i] <= d.episode_offsets[i - 1]) {
      throw ValidationError("episode_offsets", "offsets not strictly increasing");
    }
  }
  if (d.episode_offsets.back() >= static_cast<uint64_t>(n)) {
    throw ValidationError("episode_offsets", "offset beyond n_total");
  }
  for (int e = 0; e < d.num_episodes(); ++e) {
    if (d.episode_length(e) < 2) {
      throw ValidationError("episode_offsets",
                            "episode " + std::to_string(e) + " shorter than 2");
    }
    for (int64_t r = d.episode_begin(e); r < d.episode_end(e); ++r) {
      if (d.terminals[r] && r != d.episode_end(e) - 2) {
        throw ValidationError("terminals", "terminal flag at row " +
                                               std::to_string(r) +
                                               " is not the last transition");
      }
    }
  }
  if (!d.observations.allFinite()) {
    throw ValidationError("observations", "non-finite value");
  }
  if (!d.actions.allFinite()) throw ValidationError("actions", "non-finite value");
  for (float r : d.rewards) {
    if (!std::isfinite(r)) throw ValidationError("rewards", "non-finite value");
  }
  const NormStats& s = d.norm_stats;
  auto check_std = [](const std::vector<double>& v, size_t dim,
                      const char* field) {
    if (v.size() != dim) throw ValidationError(field, "wrong length");
    for (double x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) {
        throw ValidationError(field, "standard deviation must be > 0");
      }
    }
  };
  check_std(s.obs_std, d.obs_dim, "norm_stats.obs_std");
  check_std(s.act_std, d.act_dim, "norm_stats.act_std");
  if (s.obs_mean.size() != static_cast<size_t>(d.obs_dim)) {
    throw ValidationError("norm_stats.obs_mean", "wrong length");
  }
  if (s.act_mean.size() != static_cast<size_t>(d.act_dim)) {
    throw ValidationError("norm_stats.act_mean", "wrong length");
  }
  if (!(s.reward_std > 0.0)) {
    throw ValidationError("norm_stats.reward_std", "must be > 0");
  }
}

NormStats ComputeNormStats(const TrajectoryDataset& d) {
  NormStats s;
  std::vector<int64_t> all_rows(d.size());
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<int64_t> transition_rows;
  transition_rows.reserve(d.size());
  for (int e = 0; e < d.num_episodes(); ++e) {
    for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r) {
      transition_rows.push_back(r);
    }
  }
  ColumnStats(d.observations, all_rows, s.obs_mean, s.obs_std);
  ColumnStats(d.actions, transition_rows, s.act_mean, s.act_std);
  RowMatrixF rewards = Eigen::Map<const RowMatrixF>(d.rewards.data(), d.size(), 1);
  std::vector<double> rm, rs;
  ColumnStats(rewards, transition_rows, rm, rs);
  s.reward_mean = rm[0];
  s.reward_std = rs[0];
  s.terminal_encoded = d.norm_stats.terminal_encoded;
  return s;
}

void SaveDataset(const TrajectoryDataset& d, const fs::path& dir) {
  ValidateDataset(d);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError(dir.string(), "cannot create directory");

  Json manifest;
  manifest["format_version"] = kContainerFormatVersion;
  manifest["d_s"] = d.obs_dim;
  manifest["d_a"] = d.act_dim;
  manifest["n_total"] = d.size();
  manifest["n_episodes"] = d.num_episodes();
  manifest["gamma_default"] = d.gamma_default;
  manifest["terminal_encoded"] = d.norm_stats.terminal_encoded;
  manifest["normalized"] = d.normalized;
  manifest["env_id"] = d.env_id;
  Json ns;
  ns["obs_mean"] = VecToJson(d.norm_stats.obs_mean);
  ns["obs_std"] = VecToJson(d.norm_stats.obs_std);
  ns["act_mean"] = VecToJson(d.norm_stats.act_mean);
  ns["act_std"] = VecToJson(d.norm_stats.act_std);
  ns["reward_mean"] = d.norm_stats.reward_mean;
  ns["reward_std"] = d.norm_stats.reward_std;
  manifest["norm_stats"] = ns;

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw ValidationError((dir / "manifest.json").string(), "cannot open for writing");
  out << manifest.dump(2) << "\n";
  out.close();

  WriteArray(dir / "observations.f32", d.observations.data(),
             static_cast<size_t>(d.observations.size()));
  WriteArray(dir / "actions.f32", d.actions.data(),
             static_cast<size_t>(d.actions.size()));
  WriteArray(dir / "rewards.f32", d.rewards.data(), d.rewards.size());
  WriteArray(dir / "terminals.u8", d.terminals.data(), d.terminals.size());
  WriteArray(dir / "episode_offsets.u64", d.episode_offsets.data(),
             d.episode_offsets.size());
}

TrajectoryDataset LoadDataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ValidationError("manifest.json", "missing file " + manifest_path.string());
  Json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest.json", e.what());
  }
  auto get_int = [&](const char* key) -> int64_t {
    if (!m.contains(key) || !m[key].is_number_integer()) {
      throw ValidationError(key, "missing or not an integer");
    }
    return m[key].get<int64_t>();
  };
  const int64_t version = get_int("format_version");
  if (version != kContainerFormatVersion) {
    throw ValidationError("format_version", "unsupported version " + std::to_string(version));
  }
  TrajectoryDataset d;
  d.obs_dim = static_cast<int>(get_int("d_s"));
  d.act_dim = static_cast<int>(get_int("d_a"));
  const int64_t n = get_int("n_total");
  const int64_t n_episodes = get_int("n_episodes");
  if (d.obs_dim <= 0) throw ValidationError("d_s", "must be positive");
  if (d.act_dim <= 0) throw ValidationError("d_a", "must be positive");
  if (n <= 0) throw ValidationError("n_total", "must be positive");
  if (n_episodes <= 0) throw ValidationError("n_episodes", "must be positive");
  d.gamma_default = m.value("gamma_default", 1.0);
  d.normalized = m.value("normalized", false);
  d.env_id = m.value("env_id", std::string());

  auto obs = ReadArray<float>(dir / "observations.f32", n * d.obs_dim, "observations");
  auto act = ReadArray<float>(dir / "actions.f32", n * d.act_dim, "actions");
  d.rewards = ReadArray<float>(dir / "rewards.f32", n, "rewards");
  d.terminals = ReadArray<uint8_t>(dir / "terminals.u8", n, "terminals");
  d.episode_offsets = ReadArray<uint64_t>(dir / "episode_offsets.u64",
                                          n_episodes, "episode_offsets");
  d.observations = Eigen::Map<RowMatrixF>(obs.data(), n, d.obs_dim);
  d.actions = Eigen::Map<RowMatrixF>(act.data(), n, d.act_dim);

  const bool encoded = m.value("terminal_encoded", false);
  if (m.contains("norm_stats") && m["norm_stats"].is_object()) {
    const Json& ns = m["norm_stats"];
    d.norm_stats.obs_mean = JsonToVec(ns.value("obs_mean", Json()), "norm_stats.obs_mean", d.obs_dim);
    d.norm_stats.obs_std = JsonToVec(ns.value("obs_std", Json()), "norm_stats.obs_std", d.obs_dim);
    d.norm_stats.act_mean = JsonToVec(ns.value("act_mean", Json()), "norm_stats.act_mean", d.act_dim);
    d.norm_stats.act_std = JsonToVec(ns.value("act_std", Json()), "norm_stats.act_std", d.act_dim);
    d.norm_stats.reward_mean = ns.value("reward_mean", 0.0);
    d.norm_stats.reward_std = ns.value("reward_std", 1.0);
  } else {
    if (d.normalized) {
      throw ValidationError("norm_stats", "normalized container must carry its statistics");
    }
    // structural checks first so stats are computed over valid episodes
    d.norm_stats.obs_std.assign(d.obs_dim, 1.0);
    d.norm_stats.obs_mean.assign(d.obs_dim, 0.0);
    d.norm_stats.act_std.assign(d.act_dim, 1.0);
    d.norm_stats.act_mean.assign(d.act_dim, 0.0);
    ValidateDataset(d);
    d.norm_stats = ComputeNormStats(d);
  }
  d.norm_stats.terminal_encoded = encoded;
  ValidateDataset(d);
  return d;
}

TrajectoryDataset EncodeTerminals(const TrajectoryDataset& dataset) {
  if (dataset.norm_stats.terminal_encoded) {
    throw ValidationError("terminal_encoded", "terminal encoding already applied");
  }
  if (dataset.normalized) {
    throw ValidationError("normalized", "encode terminals before normalizing");
  }
  TrajectoryDataset d = dataset;
  for (int64_t i = 0; i < d.size(); ++i) {
    if (d.terminals[i]) d.rewards[i] -= kTerminalRewardOffset;
  }
  d.norm_stats.terminal_encoded = true;
  d.norm_stats = ComputeNormStats(d);
  return d;
}

TrajectoryDataset DecodeTerminals(const TrajectoryDataset& dataset) {
  if (!dataset.norm_stats.terminal_encoded) {
    throw ValidationError("terminal_encoded", "dataset is not terminal-encoded");
  }
  if (dataset.normalized) {
    throw ValidationError("normalized", "decode terminals on raw units");
  }
  TrajectoryDataset d = dataset;
  for (int64_t i = 0; i < d.size(); ++i) {
    if (d.terminals[i]) d.rewards[i] += kTerminalRewardOffset;
  }
  d.norm_stats.terminal_encoded = false;
  d.norm_stats = ComputeNormStats(d);
  return d;
}

TrajectoryDataset Normalize(const TrajectoryDataset& dataset) {
  if (dataset.normalized) throw ValidationError("normalized", "already normalized");
  TrajectoryDataset d = dataset;
  const NormStats& s = d.norm_stats;
  for (int64_t r = 0; r < d.size(); ++r) {
    for (int c = 0; c < d.obs_dim; ++c) {
      d.observations(r, c) = static_cast<float>((d.observations(r, c) - s.obs_mean[c]) / s.obs_std[c]);
    }
    for (int c = 0; c < d.act_dim; ++c) {
      d.actions(r, c) = static_cast<float>((d.actions(r, c) - s.act_mean[c]) / s.act_std[c]);
    }
    d.rewards[r] = static_cast<float>((d.rewards[r] - s.reward_mean) / s.reward_std);
  }
  d.normalized = true;
  return d;
}

TrajectoryDataset Denormalize(const TrajectoryDataset& dataset) {
  if (!dataset.normalized) throw ValidationError("normalized", "not normalized");
  TrajectoryDataset d = dataset;
  const NormStats& s = d.norm_stats;
  for (int64_t r = 0; r < d.size(); ++r) {
    for (int c = 0; c < d.obs_dim; ++c) {
      d.observations(r, c) = static_cast<float>(d.observations(r, c) * s.obs_std[c] + s.obs_mean[c]);
    }
    for (int c = 0; c < d.act_dim; ++c) {
      d.actions(r, c) = static_cast<float>(d.actions(r, c) * s.act_std[c] + s.act_mean[c]);
    }
    d.rewards[r] = static_cast<float>(d.rewards[r] * s.reward_std + s.reward_mean);
  }
  d.normalized = false;
  return d;
}

double WindowReturn(const std::vector<float>& rewards, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (float r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

SubTrajectory ExtractWindow(const TrajectoryDataset& d, int episode,
                            int64_t start, int horizon, double gamma) {
  const int64_t row = d.episode_begin(episode) + start;
  SubTrajectory w;
  w.states = d.observations.middleRows(row, horizon + 1);
  w.actions = d.actions.middleRows(row, horizon);
  w.rewards.assign(d.rewards.begin() + row, d.rewards.begin() + row + horizon);
  w.source = {episode, start};
  w.condition_y = WindowReturn(w.rewards, gamma);
  return w;
}

std::vector<SubTrajectory> SliceWindows(const TrajectoryDataset& d, int horizon,
                                        int stride, double gamma,
                                        SliceStats* stats) {
  if (horizon < 1) throw ConfigError("horizon", "must be >= 1");
  if (stride < 1) throw ConfigError("stride", "must be >= 1");
  std::vector<SubTrajectory> windows;
  int skipped = 0;
  for (int e = 0; e < d.num_episodes(); ++e) {
    const int64_t len = d.episode_length(e);
    if (len < horizon + 1) {
      ++skipped;
      continue;
    }
    for (int64_t t = 0; t + horizon + 1 <= len; t += stride) {
      windows.push_back(ExtractWindow(d, e, t, horizon, gamma));
    }
  }
  if (stats) stats->skipped_episodes = skipped;
  if (windows.empty()) {
    throw ValidationError("horizon", "H+1 = " + std::to_string(horizon + 1) +
                                         " exceeds every episode length");
  }
  return windows;
}

void NormalizeWindowInPlace(SubTrajectory& w, const NormStats& s) {
  for (int r = 0; r < w.states.rows(); ++r) {
    for (int c = 0; c < w.states.cols(); ++c) {
      w.states(r, c) = static_cast<float>((w.states(r, c) - s.obs_mean[c]) / s.obs_std[c]);
    }
  }
  for (int r = 0; r < w.actions.rows(); ++r) {
    for (int c = 0; c < w.actions.cols(); ++c) {
      w.actions(r, c) = static_cast<float>((w.actions(r, c) - s.act_mean[c]) / s.act_std[c]);
    }
  }
  for (float& r : w.rewards) {
    r = static_cast<float>((r - s.reward_mean) / s.reward_std);
  }
}

void DenormalizeWindowInPlace(SubTrajectory& w, const NormStats& s) {
  for (int r = 0; r < w.states.rows(); ++r) {
    for (int c = 0; c < w.states.cols(); ++c) {
      w.states(r, c) = static_cast<float>(w.states(r, c) * s.obs_std[c] + s.obs_mean[c]);
    }
  }
  for (int r = 0; r < w.actions.rows(); ++r) {
    for (int c = 0; c < w.actions.cols(); ++c) {
      w.actions(r, c) = static_cast<float>(w.actions(r, c) * s.act_std[c] + s.act_mean[c]);
    }
  }
  for (float& r : w.rewards) {
    r = static_cast<float>(r * s.reward_std + s.reward_mean);
  }
}

void ReweightConfig::Validate() const {
  if (n_bins < 1) throw ConfigError("n_bins", "must be >= 1");
  if (!(u >= 0.0)) throw ConfigError("u", "must be >= 0");
  if (!(q > 0.0)) throw ConfigError("q", "must be > 0");
  if (!(sparse_success_weight > 0.0)) {
    throw ConfigError("sparse_success_weight", "must be > 0");
  }
}

ReturnBins ComputeReturnBins(const std::vector<double>& returns,
                             const ReweightConfig& config) {
  config.Validate();
  if (returns.empty()) throw ValidationError("returns", "no windows to bin");
  ReturnBins b;
  const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
  b.min_return = *lo;
  b.max_return = *hi;
  const int nb = config.n_bins;
  b.counts.assign(nb, 0);
  b.midpoints.assign(nb, 0.0);
  b.weights.assign(nb, 0.0);
  b.bin_of.resize(returns.size());
  if (!(b.max_return > b.min_return)) {
    b.degenerate = true;
    b.bin_width = 0.0;
    std::fill(b.bin_of.begin(), b.bin_of.end(), 0);
    b.counts[0] = static_cast<int>(returns.size());
    b.midpoints[0] = b.min_return;
    b.weights[0] = 1.0;
    return b;
  }
  b.bin_width = (b.max_return - b.min_return) / nb;
  for (size_t i = 0; i < returns.size(); ++i) {
    int j = static_cast<int>(std::floor((returns[i] - b.min_return) / b.bin_width));
    j = std::clamp(j, 0, nb - 1);
    b.bin_of[i] = j;
    ++b.counts[j];
  }
  const double y_hat = b.max_return;
  for (int j = 0; j < nb; ++j) {
    b.midpoints[j] = b.min_return + (j + 0.5) * b.bin_width;
    const double n = b.counts[j];
    b.weights[j] = n / (n + config.u) *
                   std::exp(-std::abs(y_hat - b.midpoints[j]) / config.q);
  }
  return b;
}

WindowSampler WindowSampler::Uniform(int64_t n_windows) {
  if (n_windows <= 0) throw ValidationError("windows", "empty window set");
  WindowSampler s;
  s.kind_ = Kind::kUniform;
  s.n_ = n_windows;
  return s;
}

WindowSampler WindowSampler::ByReturn(const std::vector<SubTrajectory>& windows,
                                      const ReweightConfig& config) {
  if (config.mode != ReweightMode::kWindow) {
    throw ConfigError("mode", "return-bin sampling requires window mode");
  }
  std::vector<double> returns;
  returns.reserve(windows.size());
  for (const auto& w : windows) returns.push_back(w.condition_y);
  WindowSampler s;
  s.n_ = static_cast<int64_t>(windows.size());
  s.bins_ = ComputeReturnBins(returns, config);
  if (s.bins_.degenerate) {
    s.kind_ = Kind::kUniform;
    s.warnings_.push_back(
        "all window returns are equal; falling back to uniform sampling");
    return s;
  }
  s.kind_ = Kind::kBins;
  s.members_.assign(config.n_bins, {});
  for (size_t i = 0; i < windows.size(); ++i) {
    s.members_[s.bins_.bin_of[i]].push_back(static_cast<int64_t>(i));
  }
  s.group_weights_ = s.bins_.weights;
  s.BuildCumulative();
  return s;
}

WindowSampler WindowSampler::ByEpisode(
    const std::vector<SubTrajectory>& windows,
    const std::vector<bool>& episode_success, const ReweightConfig& config) {
  config.Validate();
  if (config.mode != ReweightMode::kEpisode) {
    throw ConfigError("mode", "episode sampling requires episode mode");
  }
  if (windows.empty()) throw ValidationError("windows", "empty window set");
  WindowSampler s;
  s.kind_ = Kind::kGroups;
  s.n_ = static_cast<int64_t>(windows.size());
  std::vector<int> group_of_episode(episode_success.size(), -1);
  bool any_success = false;
  std::vector<bool> group_success;
  for (size_t i = 0; i < windows.size(); ++i) {
    const int e = windows[i].source.episode;
    if (e < 0 || static_cast<size_t>(e) >= episode_success.size()) {
      throw ValidationError("episode_success", "missing entry for episode " + std::to_string(e));
    }
    if (group_of_episode[e] < 0) {
      group_of_episode[e] = static_cast<int>(s.members_.size());
      s.members_.emplace_back();
      group_success.push_back(episode_success[e]);
      any_success = any_success || episode_success[e];
    }
    s.members_[group_of_episode[e]].push_back(static_cast<int64_t>(i));
  }
  if (!any_success) {
    s.warnings_.push_back(
        "no successful episode; falling back to uniform episode sampling");
  }
  for (bool success : group_success) {
    s.group_weights_.push_back(success && any_success ? config.sparse_success_weight
                                                      : 1.0);
  }
  s.BuildCumulative();
  return s;
}

void WindowSampler::BuildCumulative() {
  cumulative_.resize(group_weights_.size());
  std::partial_sum(group_weights_.begin(), group_weights_.end(),
                   cumulative_.begin());
}

int64_t WindowSampler::Draw(Rng& rng) const {
  if (kind_ == Kind::kUniform) {
    return std::uniform_int_distribution<int64_t>(0, n_ - 1)(rng);
  }
  const double u =
      std::uniform_real_distribution<double>(0.0, cumulative_.back())(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  const auto& group = members_[it - cumulative_.begin()];
  const size_t k = std::uniform_int_distribution<size_t>(0, group.size() - 1)(rng);
  return group[k];
}

SampleDraw ReweightedSample(const TrajectoryDataset& dataset, int horizon,
                            const ReweightConfig& config, int64_t n, Rng& rng,
                            double gamma) {
  const auto windows = SliceWindows(dataset, horizon, 1, gamma);
  const auto sampler = WindowSampler::ByReturn(windows, config);
  SampleDraw out;
  out.warnings = sampler.warnings();
  out.windows.reserve(n);
  for (int64_t i = 0; i < n; ++i) out.windows.push_back(windows[sampler.Draw(rng)]);
  return out;
}

SampleDraw ReweightedEpisodeSample(const TrajectoryDataset& dataset,
                                   int horizon, const ReweightConfig& config,
                                   const std::vector<bool>& episode_success,
                                   int64_t n, Rng& rng, double gamma) {
  const auto windows = SliceWindows(dataset, horizon, 1, gamma);
  const auto sampler = WindowSampler::ByEpisode(windows, episode_success, config);
  SampleDraw out;
  out.warnings = sampler.warnings();
  out.windows.reserve(n);
  for (int64_t i = 0; i < n; ++i) out.windows.push_back(windows[sampler.Draw(rng)]);
  return out;
}

}  // namespace gta
