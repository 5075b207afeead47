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

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "gta/errors.h"
#include "gta/metrics.h"
#include "gta/toy_env.h"

namespace gta {
namespace {

const PointMassEnv kDense(RewardKind::kDense);

TrajectoryDataset Medium(int episodes, uint64_t seed) {
  return GenerateDataset(kDense, DataQuality::kMedium, episodes, seed);
}

// Textbook Welch test with the Boost Student-t distribution.
WelchResult ReferenceWelch(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
  };
  auto var = [](const std::vector<double>& v, double m) {
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(s / (v.size() - 1));
  };
  const double ma = mean(a), mb = mean(b);
  const double sa = var(a, ma) / a.size(), sb = var(b, mb) / b.size();
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

TEST_CASE("dynamic mse is zero on oracle rollouts") {
  const auto d = Medium(20, 1);
  const auto oracles = OraclesForEnv(d.env_id);
  const auto r = DynamicMse(d, oracles.transition, d.norm_stats);
  CHECK(r.evaluated == d.num_transitions());
  CHECK(r.excluded == 0);
  // stored states are float32, so agreement is to float rounding
  CHECK(r.mse < 1e-10);
}

TEST_CASE("dynamic mse of noisy successors matches the noise energy") {
  const auto d = Medium(200, 2);
  const auto oracles = OraclesForEnv(d.env_id);
  // rebuild each successor as f*(s, a) + 0.1 std * noise, in fresh storage
  auto noisy = d;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.1);
  for (int e = 0; e < d.num_episodes(); ++e) {
    for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r) {
      std::vector<double> s(4), a(2), next;
      for (int c = 0; c < 4; ++c) s[c] = noisy.observations(r, c);
      for (int c = 0; c < 2; ++c) a[c] = noisy.actions(r, c);
      // out-of-domain rows are excluded from the metric, so leave them as stored
      if (!oracles.transition(s, a, next)) continue;
      for (int c = 0; c < 4; ++c) {
        noisy.observations(r + 1, c) = static_cast<float>(next[c] + g(rng) * d.norm_stats.obs_std[c]);
      }
    }
  }
  const auto r = DynamicMse(noisy, oracles.transition, d.norm_stats);
  CHECK(r.mse == doctest::Approx(0.01 * 4).epsilon(0.05));
}

TEST_CASE("dynamic mse is invariant under episode permutation and excludes out-of-domain rows") {
  const auto d = Medium(30, 4);
  const auto oracles = OraclesForEnv(d.env_id);
  auto perturbed = d;
  perturbed.observations.array() += 0.01f;
  const double base = DynamicMse(perturbed, oracles.transition, d.norm_stats).mse;

  // reverse the episode order
  auto reversed = perturbed;
  int64_t row = 0;
  for (int e = d.num_episodes() - 1, k = 0; e >= 0; --e, ++k) {
    const int64_t len = d.episode_length(e);
    reversed.episode_offsets[k] = row;
    reversed.observations.middleRows(row, len) = perturbed.observations.middleRows(d.episode_begin(e), len);
    reversed.actions.middleRows(row, len) = perturbed.actions.middleRows(d.episode_begin(e), len);
    row += len;
  }
  CHECK(DynamicMse(reversed, oracles.transition, d.norm_stats).mse ==
        doctest::Approx(base).epsilon(1e-12));

  auto wild = d;
  wild.observations(0, 2) = 50.0f;
  const auto r = DynamicMse(wild, oracles.transition, d.norm_stats);
  CHECK(r.excluded == 1);
  CHECK(r.evaluated == d.num_transitions() - 1);
}

TEST_CASE("kd-tree matches brute force") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int dim : {1, 2, 6, 10}) {
    std::vector<double> points(2000 * dim);
    for (double& p : points) p = g(rng);
    // duplicates and a degenerate cluster
    for (int i = 0; i < 40; ++i) std::copy_n(points.begin(), dim, points.begin() + (100 + i) * dim);
    const KdTree tree(points, dim);
    CHECK(tree.size() == 2000);
    for (int q = 0; q < 300; ++q) {
      std::vector<double> query(dim);
      for (double& v : query) v = g(rng) * 1.5;
      CHECK(std::abs(tree.NearestSquaredDistance(query.data()) -
                     BruteForceNearestSquared(points, dim, query.data())) <= 1e-10);
    }
    CHECK(tree.NearestSquaredDistance(points.data() + 7 * dim) == 0.0);
  }
  CHECK_THROWS_AS(KdTree({}, 3), ValidationError);
}

TEST_CASE("novelty") {
  const auto ref = Medium(20, 6);
  SUBCASE("subset of the reference has zero novelty") {
    for (auto p : {NoveltyProjection::kJoint, NoveltyProjection::kState, NoveltyProjection::kAction}) {
      CHECK(Novelty(ref, ref, p) == 0.0);
    }
    const auto part = GenerateDataset(kDense, DataQuality::kMedium, 20, 6);
    CHECK(Novelty(part, ref, NoveltyProjection::kJoint) == 0.0);
  }
  SUBCASE("a single point at a known distance") {
    // reference: two transitions; generated: one transition offset along the first state axis
    TrajectoryDataset r;
    r.obs_dim = 1;
    r.act_dim = 1;
    r.observations.resize(3, 1);
    r.observations << 0.0f, 2.0f, 4.0f;
    r.actions.resize(3, 1);
    r.actions << 0.0f, 2.0f, 0.0f;
    r.rewards = {0.0f, 0.0f, 0.0f};
    r.terminals = {0, 0, 0};
    r.episode_offsets = {0};
    r.norm_stats = ComputeNormStats(r);
    TrajectoryDataset q = r;
    q.observations << 0.5f, 0.0f, 0.0f;
    q.actions << 0.0f, 0.0f, 0.0f;
    q.episode_offsets = {0, 2};
    const auto& s = r.norm_stats;
    const double ds = 0.5 / s.obs_std[0];
    CHECK(Novelty(q, r, NoveltyProjection::kState) == doctest::Approx(ds * ds));
    CHECK(Novelty(q, r, NoveltyProjection::kState, false) == doctest::Approx(ds));
    CHECK(Novelty(q, r, NoveltyProjection::kAction) == 0.0);
  }
  SUBCASE("kd-tree novelty equals a brute-force scan") {
    const auto gen = Medium(10, 7);
    const auto& st = ref.norm_stats;
    std::vector<double> points;
    for (int e = 0; e < ref.num_episodes(); ++e) {
      for (int64_t r = ref.episode_begin(e); r + 1 < ref.episode_end(e); ++r) {
        for (int c = 0; c < 4; ++c) points.push_back((ref.observations(r, c) - st.obs_mean[c]) / st.obs_std[c]);
        for (int c = 0; c < 2; ++c) points.push_back((ref.actions(r, c) - st.act_mean[c]) / st.act_std[c]);
      }
    }
    double total = 0.0;
    int n = 0;
    for (int e = 0; e < gen.num_episodes(); ++e) {
      for (int64_t r = gen.episode_begin(e); r + 1 < gen.episode_end(e); ++r) {
        std::vector<double> q;
        for (int c = 0; c < 4; ++c) q.push_back((gen.observations(r, c) - st.obs_mean[c]) / st.obs_std[c]);
        for (int c = 0; c < 2; ++c) q.push_back((gen.actions(r, c) - st.act_mean[c]) / st.act_std[c]);
        total += BruteForceNearestSquared(points, 6, q.data());
        ++n;
      }
    }
    CHECK(std::abs(Novelty(gen, ref, NoveltyProjection::kJoint) - total / n) <= 1e-10);
  }
  CHECK_THROWS_AS(Novelty(Normalize(ref), ref, NoveltyProjection::kJoint), ValidationError);
}

TEST_CASE("oracle reward") {
  TrajectoryDataset d;
  d.obs_dim = 4;
  d.act_dim = 2;
  d.observations.resize(4, 4);
  d.observations << 0, 0, 0, 0,
                    1, 1, 0, 0,
                    0.5f, 1, 1, 1,
                    0, 0, 0, 0;
  d.actions.resize(4, 2);
  d.actions << 1, 0,
               0, 0,
               0.5f, -0.5f,
               0, 0;
  d.rewards.assign(4, 0.0f);
  d.terminals.assign(4, 0);
  d.episode_offsets = {0};
  const auto o = OraclesForEnv(std::string(kDenseEnvId));
  const double r0 = -std::sqrt(2.0) - 0.05;
  const double r1 = 0.0;
  const double r2 = -0.5 - 0.05 * 0.5;
  CHECK(OracleRewardMean(d, o.reward) == doctest::Approx((r0 + r1 + r2) / 3.0).epsilon(1e-12));
  const auto sparse = OraclesForEnv(std::string(kSparseEnvId));
  CHECK(OracleRewardMean(d, sparse.reward) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(OraclesForEnv("hopper-medium-v2"), ConfigError);
}

TEST_CASE("pearson correlation") {
  CHECK(PearsonCorrelation({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  CHECK(PearsonCorrelation({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
  // hand-computed: x = 1..5, y = 2,1,4,3,5 -> r = 0.8
  CHECK(PearsonCorrelation({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}) == doctest::Approx(0.8));
  CHECK_THROWS_AS(PearsonCorrelation({1, 2}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(PearsonCorrelation({1, 1, 1}, {1, 2, 3}), ValidationError);
  std::vector<ProvenanceRecord> recs(5);
  for (int i = 0; i < 5; ++i) {
    recs[i].condition = i;
    recs[i].realized_return = i;
  }
  CHECK(ConditionReturnCorrelation(recs) == doctest::Approx(1.0));
}

TEST_CASE("incomplete beta and Student t against Boost") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> shape(0.3, 60.0), unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = shape(rng), b = shape(rng), x = unit(rng);
    CHECK(std::abs(RegularizedIncompleteBeta(a, b, x) - boost::math::ibeta(a, b, x)) <= 1e-12);
  }
  for (double df : {1.0, 2.5, 7.0, 30.0, 250.0}) {
    const boost::math::students_t dist(df);
    for (double t : {-8.0, -2.0, -0.3, 0.0, 0.7, 1.96, 5.0}) {
      CHECK(std::abs(StudentTCdf(t, df) - boost::math::cdf(dist, t)) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(RegularizedIncompleteBeta(0.0, 1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(StudentTCdf(1.0, 0.0), ConfigError);
}

TEST_CASE("welch test against a reference on random fixtures") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(2, 40);
  std::uniform_real_distribution<double> shift(-3.0, 3.0), scale(0.1, 5.0);
  for (int f = 0; f < 100; ++f) {
    std::normal_distribution<double> ga(0.0, scale(rng)), gb(shift(rng), scale(rng));
    std::vector<double> a(size(rng)), b(size(rng));
    for (double& x : a) x = ga(rng);
    for (double& x : b) x = gb(rng);
    const auto got = WelchTTest(a, b);
    const auto want = ReferenceWelch(a, b);
    CHECK(std::abs(got.t - want.t) <= 1e-10 * std::max(1.0, std::abs(want.t)));
    CHECK(std::abs(got.df - want.df) <= 1e-10 * want.df);
    CHECK(std::abs(got.p - want.p) <= 1e-10);
  }
}

TEST_CASE("welch test examples") {
  const std::vector<double> a = {1, 2, 3, 4};
  const auto same = WelchTTest(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == doctest::Approx(1.0).epsilon(1e-14));
  // b = a + 10: t = -10 / sqrt(2 * (5/3) / 4), df = 6
  const std::vector<double> b = {11, 12, 13, 14};
  const auto r = WelchTTest(a, b);
  CHECK(r.t == doctest::Approx(-10.0 / std::sqrt(2.0 * (5.0 / 3.0) / 4.0)));
  CHECK(r.df == doctest::Approx(6.0));
  CHECK(r.p < 0.01);
  const auto swapped = WelchTTest(b, a);
  CHECK(swapped.t == -r.t);
  CHECK(swapped.p == r.p);
  CHECK_THROWS_AS(WelchTTest({1, 1}, {2, 2}), ValidationError);
  CHECK_THROWS_AS(WelchTTest({1}, {2, 3}), ValidationError);
}

TEST_CASE("pairwise summation") {
  std::vector<double> v(100001);
  for (size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + i);
  long double exact = 0;
  for (double x : v) exact += x;
  CHECK(std::abs(PairwiseSum(v.data(), v.size()) - static_cast<double>(exact)) < 1e-12);
  CHECK(PairwiseSum(v.data(), 0) == 0.0);
}

TEST_CASE("quality report") {
  const auto ref = Medium(20, 10);
  const auto o = OraclesForEnv(ref.env_id);
  const auto self = EvaluateQuality(ref, ref, o);
  CHECK(self.novelty_joint == 0.0);
  CHECK(self.novelty_state == 0.0);
  CHECK(self.novelty_action == 0.0);
  CHECK(self.dynamic_mse < 1e-10);
  CHECK_FALSE(self.pearson_condition_return.has_value());
  CHECK(self.n_evaluated == ref.num_transitions());

  const auto j = self.ToJson();
  std::vector<std::string> keys;
  for (const auto& item : j.items()) keys.push_back(item.key());
  CHECK(keys == std::vector<std::string>{"dynamic_mse", "dynamic_mse_excluded", "novelty_joint",
                                         "novelty_state", "novelty_action", "oracle_reward_mean",
                                         "pearson_condition_return", "n_evaluated"});
  CHECK(j["pearson_condition_return"].is_null());
  const std::string table = self.ToTable();
  size_t last = 0;
  for (const auto& k : keys) {
    const size_t pos = table.find(k);
    REQUIRE(pos != std::string::npos);
    CHECK(pos >= last);
    last = pos;
  }
  const auto other = Medium(5, 11);
  const auto r = EvaluateQuality(other, ref, o);
  CHECK(r.novelty_joint > 0.0);
  CHECK(r.novelty_state >= 0.0);
  CHECK(std::isfinite(r.oracle_reward_mean));
}

}  // namespace
}  // namespace gta
