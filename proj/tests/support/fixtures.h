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

#ifndef GTA_TESTS_SUPPORT_FIXTURES_H_
#define GTA_TESTS_SUPPORT_FIXTURES_H_

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "gta/traj_store.h"

namespace gta::testing {

// Random dataset with the given episode lengths (rows per episode).
inline TrajectoryDataset RandomDataset(const std::vector<int>& lengths, int obs_dim,
                                       int act_dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  TrajectoryDataset d;
  d.obs_dim = obs_dim;
  d.act_dim = act_dim;
  int64_t n = 0;
  for (int len : lengths) {
    d.episode_offsets.push_back(static_cast<uint64_t>(n));
    n += len;
  }
  d.observations.resize(n, obs_dim);
  d.actions = RowMatrixF::Zero(n, act_dim);
  d.rewards.assign(n, 0.0f);
  d.terminals.assign(n, 0);
  for (int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < obs_dim; ++c) d.observations(i, c) = g(rng);
  }
  for (int e = 0; e < d.num_episodes(); ++e) {
    for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r) {
      for (int c = 0; c < act_dim; ++c) d.actions(r, c) = g(rng);
      d.rewards[r] = g(rng);
    }
  }
  d.env_id = "test";
  d.norm_stats = ComputeNormStats(d);
  return d;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("gta_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace gta::testing

#endif  // GTA_TESTS_SUPPORT_FIXTURES_H_
