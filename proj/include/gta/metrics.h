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

#ifndef GTA_METRICS_H_
#define GTA_METRICS_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gta/sampler.h"
#include "gta/traj_store.h"

namespace gta {

// Ground-truth transition; returns false where the model is undefined.
using TransitionOracle = std::function<bool(
    const std::vector<double>& s, const std::vector<double>& a, std::vector<double>& next)>;
using RewardOracle =
    std::function<double(const std::vector<double>& s, const std::vector<double>& a)>;

struct EnvOracles {
  TransitionOracle transition;
  RewardOracle reward;
};

// Oracles for a known environment id; ConfigError("env") otherwise.
EnvOracles OraclesForEnv(const std::string& env_id);

// Summation by recursive halving; the result depends only on the order of
// `values`.
double PairwiseSum(const double* values, size_t count);

struct DynamicMseResult {
  double mse = 0.0;
  int64_t evaluated = 0;
  int64_t excluded = 0;  // transitions outside the oracle's domain
};

// Mean over transitions of ||f*(s, a) - s'||^2, with states z-scored by
// `reference_stats`.
DynamicMseResult DynamicMse(const TrajectoryDataset& generated,
                            const TransitionOracle& oracle,
                            const NormStats& reference_stats);

// Exact nearest-neighbour index over points in R^d (k-d tree, median split).
class KdTree {
 public:
  // `points` is row-major, n x dim.
  KdTree(std::vector<double> points, int dim);

  // Squared Euclidean distance to the nearest stored point.
  double NearestSquaredDistance(const double* query) const;
  int64_t size() const { return n_; }

 private:
  struct Node {
    int64_t begin, end;  // range into order_
    int axis = -1;       // -1 for leaves
    double split = 0.0;
    int32_t left = -1, right = -1;
  };
  int32_t Build(int64_t begin, int64_t end);
  void Search(int32_t node, const double* query, double& best) const;
  double SquaredDistance(int64_t point, const double* query) const;

  std::vector<double> points_;
  int dim_;
  int64_t n_;
  std::vector<int64_t> order_;
  std::vector<Node> nodes_;
};

enum class NoveltyProjection { kJoint, kState, kAction };

// Brute-force nearest-neighbour scan; the reference for KdTree.
double BruteForceNearestSquared(const std::vector<double>& points, int dim,
                                const double* query);

// Mean over generated transitions of the (squared, by default) distance to
// the nearest reference transition, both z-scored by the reference stats.
double Novelty(const TrajectoryDataset& generated, const TrajectoryDataset& reference,
               NoveltyProjection projection, bool squared = true);

// Mean oracle reward over generated (s, a).
double OracleRewardMean(const TrajectoryDataset& generated, const RewardOracle& reward);

// Pearson r. Throws ValidationError for < 3 pairs or zero variance.
double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y);
double ConditionReturnCorrelation(const std::vector<ProvenanceRecord>& records);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double RegularizedIncompleteBeta(double a, double b, double x);
// P(T <= t) for Student's t with `df` degrees of freedom.
double StudentTCdf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Unequal-variance two-sample t-test (a minus b).
WelchResult WelchTTest(const std::vector<double>& a, const std::vector<double>& b);

struct QualityReport {
  double dynamic_mse = 0.0;
  int64_t dynamic_mse_excluded = 0;
  double novelty_joint = 0.0;
  double novelty_state = 0.0;
  double novelty_action = 0.0;
  double oracle_reward_mean = 0.0;
  std::optional<double> pearson_condition_return;
  int64_t n_evaluated = 0;

  nlohmann::ordered_json ToJson() const;
  std::string ToTable() const;
};

QualityReport EvaluateQuality(const TrajectoryDataset& generated,
                              const TrajectoryDataset& reference,
                              const EnvOracles& oracles,
                              const std::vector<ProvenanceRecord>& provenance = {},
                              bool squared_novelty = true);

}  // namespace gta

#endif  // GTA_METRICS_H_
