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

#include "gta/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "gta/errors.h"
#include "gta/toy_env.h"

namespace gta {
namespace {

constexpr int kLeafSize = 16;

void RequireEnvUnits(const TrajectoryDataset& d, const char* field) {
  if (d.normalized) throw ValidationError(field, "expected a dataset in environment units");
}

// Continued fraction for I_x(a, b), modified Lentz. `y` is 1 - x, passed in
// to avoid cancellation.
double BetaContinuedFraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 20000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

double IncompleteBeta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaContinuedFraction(a, b, x) / a;
  return 1.0 - front * BetaContinuedFraction(b, a, y) / b;
}

// Two-sided tail P(|T| >= |t|).
double StudentTwoSided(double t, double df) {
  const double t2 = t * t;
  return IncompleteBeta(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2));
}

std::vector<double> ProjectRow(const TrajectoryDataset& d, int64_t row, const NormStats& s,
                               NoveltyProjection projection) {
  std::vector<double> out;
  if (projection != NoveltyProjection::kAction) {
    for (int c = 0; c < d.obs_dim; ++c) {
      out.push_back((d.observations(row, c) - s.obs_mean[c]) / s.obs_std[c]);
    }
  }
  if (projection != NoveltyProjection::kState) {
    for (int c = 0; c < d.act_dim; ++c) {
      out.push_back((d.actions(row, c) - s.act_mean[c]) / s.act_std[c]);
    }
  }
  return out;
}

std::vector<int64_t> TransitionRows(const TrajectoryDataset& d) {
  std::vector<int64_t> rows;
  rows.reserve(d.num_transitions());
  for (int e = 0; e < d.num_episodes(); ++e) {
    for (int64_t r = d.episode_begin(e); r + 1 < d.episode_end(e); ++r) rows.push_back(r);
  }
  return rows;
}

}  // namespace

EnvOracles OraclesForEnv(const std::string& env_id) {
  const PointMassEnv env = PointMassEnv::FromId(env_id);
  const RewardKind kind = env.kind();
  EnvOracles o;
  o.transition = [](const std::vector<double>& s, const std::vector<double>& a,
                    std::vector<double>& next) {
    PointState ps;
    PointAction pa;
    std::copy_n(s.begin(), kPointMassObsDim, ps.begin());
    std::copy_n(a.begin(), kPointMassActDim, pa.begin());
    if (!PointMassEnv::InDomain(ps) || !std::isfinite(pa[0]) || !std::isfinite(pa[1])) {
      return false;
    }
    const PointState n = OracleDynamics(ps, pa);
    next.assign(n.begin(), n.end());
    return true;
  };
  o.reward = [kind](const std::vector<double>& s, const std::vector<double>& a) {
    PointState ps;
    PointAction pa;
    std::copy_n(s.begin(), kPointMassObsDim, ps.begin());
    std::copy_n(a.begin(), kPointMassActDim, pa.begin());
    return OracleReward(kind, ps, pa);
  };
  return o;
}

double PairwiseSum(const double* values, size_t count) {
  if (count <= 8) {
    double s = 0.0;
    for (size_t i = 0; i < count; ++i) s += values[i];
    return s;
  }
  const size_t half = count / 2;
  return PairwiseSum(values, half) + PairwiseSum(values + half, count - half);
}

DynamicMseResult DynamicMse(const TrajectoryDataset& generated, const TransitionOracle& oracle,
                            const NormStats& reference_stats) {
  RequireEnvUnits(generated, "generated");
  DynamicMseResult result;
  std::vector<double> errors;
  std::vector<double> s(generated.obs_dim), a(generated.act_dim), next;
  for (int64_t row : TransitionRows(generated)) {
    for (int c = 0; c < generated.obs_dim; ++c) s[c] = generated.observations(row, c);
    for (int c = 0; c < generated.act_dim; ++c) a[c] = generated.actions(row, c);
    if (!oracle(s, a, next)) {
      ++result.excluded;
      continue;
    }
    double err = 0.0;
    for (int c = 0; c < generated.obs_dim; ++c) {
      const double diff = (next[c] - generated.observations(row + 1, c)) / reference_stats.obs_std[c];
      err += diff * diff;
    }
    errors.push_back(err);
  }
  result.evaluated = static_cast<int64_t>(errors.size());
  if (result.evaluated > 0) {
    result.mse = PairwiseSum(errors.data(), errors.size()) / static_cast<double>(result.evaluated);
  }
  return result;
}

KdTree::KdTree(std::vector<double> points, int dim)
    : points_(std::move(points)), dim_(dim), n_(0) {
  if (dim_ < 1) throw ConfigError("dim", "must be >= 1");
  if (points_.size() % dim_ != 0) throw ConfigError("points", "size is not a multiple of dim");
  n_ = static_cast<int64_t>(points_.size()) / dim_;
  if (n_ == 0) throw ValidationError("reference", "empty reference set");
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), 0);
  Build(0, n_);
}

int32_t KdTree::Build(int64_t begin, int64_t end) {
  const auto id = static_cast<int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;
  int axis = 0;
  double widest = -1.0;
  for (int c = 0; c < dim_; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int64_t i = begin; i < end; ++i) {
      const double v = points_[order_[i] * dim_ + c];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = c;
    }
  }
  if (widest <= 0.0) return id;  // all points identical
  const int64_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int64_t x, int64_t y) {
                     return points_[x * dim_ + axis] < points_[y * dim_ + axis];
                   });
  // left holds coordinates <= split, right holds coordinates >= split
  const double split = points_[order_[mid] * dim_ + axis];
  const int32_t left = Build(begin, mid);
  const int32_t right = Build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::SquaredDistance(int64_t point, const double* query) const {
  double s = 0.0;
  const double* p = &points_[point * dim_];
  for (int c = 0; c < dim_; ++c) {
    const double d = p[c] - query[c];
    s += d * d;
  }
  return s;
}

void KdTree::Search(int32_t id, const double* query, double& best) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (int64_t i = node.begin; i < node.end; ++i) {
      best = std::min(best, SquaredDistance(order_[i], query));
    }
    return;
  }
  const double diff = query[node.axis] - node.split;
  const int32_t near = diff < 0.0 ? node.left : node.right;
  const int32_t far = diff < 0.0 ? node.right : node.left;
  Search(near, query, best);
  if (diff * diff < best) Search(far, query, best);
}

double KdTree::NearestSquaredDistance(const double* query) const {
  double best = std::numeric_limits<double>::infinity();
  Search(0, query, best);
  return best;
}

double BruteForceNearestSquared(const std::vector<double>& points, int dim, const double* query) {
  if (points.empty()) throw ValidationError("reference", "empty reference set");
  double best = std::numeric_limits<double>::infinity();
  for (size_t p = 0; p < points.size(); p += dim) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double d = points[p + c] - query[c];
      s += d * d;
    }
    best = std::min(best, s);
  }
  return best;
}

double Novelty(const TrajectoryDataset& generated, const TrajectoryDataset& reference,
               NoveltyProjection projection, bool squared) {
  RequireEnvUnits(generated, "generated");
  RequireEnvUnits(reference, "reference");
  if (generated.obs_dim != reference.obs_dim || generated.act_dim != reference.act_dim) {
    throw ValidationError("obs_dim", "generated and reference dimensions differ");
  }
  const NormStats& stats = reference.norm_stats;
  const auto ref_rows = TransitionRows(reference);
  if (ref_rows.empty()) throw ValidationError("reference", "empty reference set");
  std::vector<double> points;
  int dim = 0;
  for (int64_t r : ref_rows) {
    const auto p = ProjectRow(reference, r, stats, projection);
    dim = static_cast<int>(p.size());
    points.insert(points.end(), p.begin(), p.end());
  }
  const KdTree tree(std::move(points), dim);
  std::vector<double> distances;
  for (int64_t r : TransitionRows(generated)) {
    const auto q = ProjectRow(generated, r, stats, projection);
    const double d2 = tree.NearestSquaredDistance(q.data());
    distances.push_back(squared ? d2 : std::sqrt(d2));
  }
  if (distances.empty()) return 0.0;
  return PairwiseSum(distances.data(), distances.size()) / static_cast<double>(distances.size());
}

double OracleRewardMean(const TrajectoryDataset& generated, const RewardOracle& reward) {
  RequireEnvUnits(generated, "generated");
  std::vector<double> values;
  std::vector<double> s(generated.obs_dim), a(generated.act_dim);
  for (int64_t row : TransitionRows(generated)) {
    for (int c = 0; c < generated.obs_dim; ++c) s[c] = generated.observations(row, c);
    for (int c = 0; c < generated.act_dim; ++c) a[c] = generated.actions(row, c);
    values.push_back(reward(s, a));
  }
  if (values.empty()) return 0.0;
  return PairwiseSum(values.data(), values.size()) / static_cast<double>(values.size());
}

double PearsonCorrelation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("pairs", "length mismatch");
  if (x.size() < 3) throw ValidationError("pairs", "need at least 3 pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ValidationError("variance", "correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double ConditionReturnCorrelation(const std::vector<ProvenanceRecord>& records) {
  std::vector<double> cond, realized;
  for (const auto& r : records) {
    cond.push_back(r.condition);
    realized.push_back(r.realized_return);
  }
  return PearsonCorrelation(cond, realized);
}

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("shape", "beta shapes must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("x", "must lie in [0, 1]");
  return IncompleteBeta(a, b, x, 1.0 - x);
}

double StudentTCdf(double t, double df) {
  if (!(df > 0.0)) throw ConfigError("df", "must be > 0");
  const double tail = 0.5 * StudentTwoSided(t, df);
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult WelchTTest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("scores", "each sample needs >= 2 values");
  auto moments = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::pair<double, double>(m, ss / (n - 1.0));
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  if (va == 0.0 && vb == 0.0) throw ValidationError("variance", "both samples have zero variance");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double qa = va / na;
  const double qb = vb / nb;
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(qa + qb);
  r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p = std::min(1.0, StudentTwoSided(r.t, r.df));
  return r;
}

nlohmann::ordered_json QualityReport::ToJson() const {
  nlohmann::ordered_json j;
  j["dynamic_mse"] = dynamic_mse;
  j["dynamic_mse_excluded"] = dynamic_mse_excluded;
  j["novelty_joint"] = novelty_joint;
  j["novelty_state"] = novelty_state;
  j["novelty_action"] = novelty_action;
  j["oracle_reward_mean"] = oracle_reward_mean;
  if (pearson_condition_return) {
    j["pearson_condition_return"] = *pearson_condition_return;
  } else {
    j["pearson_condition_return"] = nullptr;
  }
  j["n_evaluated"] = n_evaluated;
  return j;
}

std::string QualityReport::ToTable() const {
  std::ostringstream out;
  out << std::left << std::setprecision(6);
  auto row = [&](const std::string& name, const std::string& value) {
    out << std::setw(26) << name << value << '\n';
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
  };
  row("dynamic_mse", num(dynamic_mse));
  row("dynamic_mse_excluded", std::to_string(dynamic_mse_excluded));
  row("novelty_joint", num(novelty_joint));
  row("novelty_state", num(novelty_state));
  row("novelty_action", num(novelty_action));
  row("oracle_reward_mean", num(oracle_reward_mean));
  row("pearson_condition_return",
      pearson_condition_return ? num(*pearson_condition_return) : std::string("n/a"));
  row("n_evaluated", std::to_string(n_evaluated));
  return out.str();
}

QualityReport EvaluateQuality(const TrajectoryDataset& generated,
                              const TrajectoryDataset& reference, const EnvOracles& oracles,
                              const std::vector<ProvenanceRecord>& provenance,
                              bool squared_novelty) {
  QualityReport r;
  const DynamicMseResult mse = DynamicMse(generated, oracles.transition, reference.norm_stats);
  r.dynamic_mse = mse.mse;
  r.dynamic_mse_excluded = mse.excluded;
  r.novelty_joint = Novelty(generated, reference, NoveltyProjection::kJoint, squared_novelty);
  r.novelty_state = Novelty(generated, reference, NoveltyProjection::kState, squared_novelty);
  r.novelty_action = Novelty(generated, reference, NoveltyProjection::kAction, squared_novelty);
  r.oracle_reward_mean = OracleRewardMean(generated, oracles.reward);
  if (provenance.size() >= 3) {
    try {
      r.pearson_condition_return = ConditionReturnCorrelation(provenance);
    } catch (const ValidationError&) {
      r.pearson_condition_return.reset();
    }
  }
  r.n_evaluated = generated.num_transitions();
  return r;
}

}  // namespace gta
