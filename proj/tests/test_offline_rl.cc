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

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gta/errors.h"
#include "gta/offline_rl.h"
#include "gta/seeding.h"
#include "gta/toy_env.h"

namespace gta {
namespace {

const PointMassEnv kDense(RewardKind::kDense);

bool SameValues(const nn::ParameterList& a, const nn::ParameterList& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].second->value != b[i].second->value) return false;
  }
  return true;
}

TEST_CASE("replay from a single source is the flat transition set") {
  const auto d = GenerateDataset(kDense, DataQuality::kMedium, 5, 1);
  const auto buf = BuildReplay({{&d, 1.0}}, 0);
  REQUIRE(buf.size() == d.num_transitions());
  int64_t i = 0;
  for (int e = 0; e < d.num_episodes(); ++e) {
    for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r, ++i) {
      CHECK(buf.states.row(i) == d.observations.row(r));
      CHECK(buf.next_states.row(i) == d.observations.row(r + 1));
      CHECK(buf.actions.row(i) == d.actions.row(r));
      CHECK(buf.rewards[i] == d.rewards[r]);
    }
  }
  for (int c = 0; c < buf.obs_dim; ++c) CHECK(buf.obs_std[c] > 0.0);
}

TEST_CASE("replay mixing by weight") {
  const auto a = GenerateDataset(kDense, DataQuality::kMedium, 10, 2);
  const auto b = GenerateDataset(kDense, DataQuality::kExpert, 10, 3);
  CHECK(BuildReplay({{&a, 1.0}, {&b, 1.0}}, 0).size() == a.num_transitions() + b.num_transitions());
  const auto only_b = BuildReplay({{&a, 0.0}, {&b, 1.0}}, 0);
  CHECK(only_b.size() == b.num_transitions());
  CHECK(only_b.states.row(0) == b.observations.row(0));
  // 1:3 from two equal sources keeps all of b and a third of a
  const auto skew = BuildReplay({{&a, 1.0}, {&b, 3.0}}, 0);
  CHECK(skew.size() == b.num_transitions() + b.num_transitions() / 3);
  CHECK(BuildReplay({{&a, 1.0}, {&b, 3.0}}, 0).states == skew.states);
  CHECK_THROWS_AS(BuildReplay({}, 0), ValidationError);
  CHECK_THROWS_AS(BuildReplay({{&a, 0.0}}, 0), ConfigError);
  CHECK_THROWS_AS(BuildReplay({{&a, -1.0}}, 0), ConfigError);
}

TEST_CASE("replay carries dones and rejects encoded terminals") {
  const PointMassEnv sparse(RewardKind::kSparse);
  const auto d = GenerateDataset(sparse, DataQuality::kExpert, 10, 4);
  const auto buf = BuildReplay({{&d, 1.0}}, 0);
  int dones = 0;
  for (auto v : buf.dones) dones += v;
  int terminals = 0;
  for (auto v : d.terminals) terminals += v;
  CHECK(dones == terminals);
  CHECK(dones > 0);
  const auto enc = EncodeTerminals(d);
  CHECK_THROWS_AS(BuildReplay({{&enc, 1.0}}, 0), ValidationError);
}

TEST_CASE("zero-action policy return has a closed form") {
  const auto zero = [](const PointState&) { return PointAction{0.0, 0.0}; };
  const auto r = EvaluatePolicy(kDense, zero, 5, 7);
  // the mass never moves, so each step pays the start distance
  Rng rng(7);
  std::uniform_real_distribution<double> start(-1.0, 0.0);
  for (int e = 0; e < 5; ++e) {
    const double px = start(rng);
    const double py = start(rng);
    CHECK(r.returns[e] == doctest::Approx(-64.0 * std::hypot(px - 1.0, py - 1.0)).epsilon(1e-12));
  }
  CHECK(EvaluatePolicy(kDense, zero, 1, 3).std == 0.0);
  CHECK(EvaluatePolicy(kDense, zero, 5, 7).mean == r.mean);
  CHECK_THROWS_AS(EvaluatePolicy(kDense, zero, 0, 7), ConfigError);
}

TEST_CASE("normalized score") {
  CHECK(NormalizedScore(-10.0, -100.0, -10.0) == doctest::Approx(100.0));
  CHECK(NormalizedScore(-100.0, -100.0, -10.0) == doctest::Approx(0.0));
  CHECK(NormalizedScore(-55.0, -100.0, -10.0) == doctest::Approx(50.0));
  CHECK_THROWS_AS(NormalizedScore(0.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("td3bc config validation") {
  TD3BCConfig c;
  CHECK(c.batch_size == 1024);
  CHECK(c.alpha_bc == 2.5);
  c.tau = 0.0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c.tau = 1.0;
  CHECK_NOTHROW(c.Validate());
  c.policy_delay = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("zero gradient steps return the initial policy") {
  const auto d = GenerateDataset(kDense, DataQuality::kMedium, 3, 5);
  const auto buf = BuildReplay({{&d, 1.0}}, 0);
  TD3BCConfig c;
  c.width = 16;
  c.steps = 0;
  c.seed = 9;
  const Policy trained = TrainTD3BC(buf, c);
  const Policy fresh(buf.obs_dim, buf.act_dim, 16, DeriveSeed(9, 0));
  CHECK(SameValues(trained.Parameters(), fresh.Parameters()));
  CHECK_THROWS_AS(TrainTD3BC(ReplayBuffer{}, c), ValidationError);
}

TEST_CASE("td3bc is bit-reproducible and policies round-trip") {
  const auto d = GenerateDataset(kDense, DataQuality::kMedium, 5, 6);
  const auto buf = BuildReplay({{&d, 1.0}}, 0);
  TD3BCConfig c;
  c.width = 16;
  c.batch_size = 32;
  c.steps = 200;
  c.seed = 1;
  TD3BCLog log;
  const Policy p1 = TrainTD3BC(buf, c, &log);
  const Policy p2 = TrainTD3BC(buf, c);
  CHECK(SameValues(p1.Parameters(), p2.Parameters()));
  CHECK(log.critic_loss.size() == 2);

  const auto path = std::filesystem::temp_directory_path() / "gta_test_policy.ckpt";
  SavePolicy(p1, path);
  const Policy loaded = LoadPolicy(path);
  CHECK(SameValues(p1.Parameters(), loaded.Parameters()));
  CHECK(loaded.obs_mean == p1.obs_mean);
  CHECK(loaded.obs_std == p1.obs_std);
  const PointState s{-0.3, 0.2, 0.5, -0.1};
  CHECK(loaded.Act(s) == p1.Act(s));
  std::filesystem::remove(path);
}

TEST_CASE("td3bc recovers the expert controller from its own data") {
  const auto d = GenerateDataset(kDense, DataQuality::kExpert, 100, 10);
  const auto buf = BuildReplay({{&d, 1.0}}, 0);
  // references under the same evaluation seeds
  Rng noise_rng(11);
  const auto expert = EvaluatePolicy(
      kDense, [&](const PointState& s) { return ExpertPolicy(s, noise_rng); }, 20, 12);
  Rng random_rng(13);
  const auto random = EvaluatePolicy(
      kDense, [&](const PointState& s) { return RandomPolicy(s, random_rng); }, 20, 12);

  TD3BCConfig c;
  c.width = 128;
  c.batch_size = 256;
  c.steps = 5000;
  std::vector<nn::ParameterList> params;
  std::vector<Policy> policies;
  for (uint64_t seed : {1, 2}) {
    c.seed = seed;
    policies.push_back(TrainTD3BC(buf, c));
    const Policy& p = policies.back();
    const auto r = EvaluatePolicy(kDense, [&](const PointState& s) { return p.Act(s); }, 20, 12);
    const double score = NormalizedScore(r.mean, random.mean, expert.mean);
    MESSAGE("seed " << seed << " return " << r.mean << " expert " << expert.mean << " random "
                    << random.mean << " score " << score);
    CHECK(score >= 90.0);
  }
  CHECK_FALSE(SameValues(policies[0].Parameters(), policies[1].Parameters()));
}

}  // namespace
}  // namespace gta
