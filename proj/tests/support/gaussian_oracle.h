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

#ifndef GTA_TESTS_SUPPORT_GAUSSIAN_ORACLE_H_
#define GTA_TESTS_SUPPORT_GAUSSIAN_ORACLE_H_

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "gta/denoiser.h"

namespace gta::testing {

// Live entries of a trajectory tensor distributed as N(mean, cov). The
// posterior mean under Gaussian noise of level sigma is
//   m + S (S + sigma^2 I)^{-1} (x - m).
class GaussianOracle : public Denoiser {
 public:
  GaussianOracle(int steps, int channels, RowMatrixF live, Eigen::VectorXd mean,
                 Eigen::MatrixXd cov)
      : steps_(steps), channels_(channels), live_(std::move(live)),
        mean_(std::move(mean)), cov_(std::move(cov)) {
    for (int t = 0; t < steps_; ++t) {
      for (int c = 0; c < channels_; ++c) {
        if (live_(t, c) != 0.0f) slots_.push_back(t * channels_ + c);
      }
    }
  }

  int steps() const override { return steps_; }
  int channels() const override { return channels_; }
  RowMatrixF LiveEntries() const override { return live_; }
  int dim() const { return static_cast<int>(slots_.size()); }

  Eigen::VectorXd Posterior(const Eigen::VectorXd& x, double sigma) const {
    const Eigen::MatrixXd a =
        cov_ + sigma * sigma * Eigen::MatrixXd::Identity(dim(), dim());
    return mean_ + cov_ * a.ldlt().solve(x - mean_);
  }

  Eigen::VectorXd Gather(const TrajBatch& x, int sample) const {
    Eigen::VectorXd v(dim());
    const float* base = x.data() + static_cast<int64_t>(sample) * steps_ * channels_;
    for (int i = 0; i < dim(); ++i) v(i) = base[slots_[i]];
    return v;
  }

  void Scatter(const Eigen::VectorXd& v, TrajBatch& x, int sample) const {
    float* base = x.data() + static_cast<int64_t>(sample) * steps_ * channels_;
    for (int i = 0; i < dim(); ++i) base[slots_[i]] = static_cast<float>(v(i));
  }

  TrajBatch Denoise(const TrajBatch& x, const std::vector<double>& sigma,
                    const std::vector<Condition>&) const override {
    TrajBatch out = TrajBatch::Zero(x.rows(), x.cols());
    for (size_t b = 0; b < sigma.size(); ++b) {
      Scatter(Posterior(Gather(x, static_cast<int>(b)), sigma[b]), out, static_cast<int>(b));
    }
    return out;
  }

  // n samples of clean data, stacked.
  TrajBatch Sample(int n, std::mt19937_64& rng) const {
    const Eigen::MatrixXd chol = cov_.llt().matrixL();
    std::normal_distribution<double> gauss(0.0, 1.0);
    TrajBatch out = TrajBatch::Zero(static_cast<int64_t>(n) * steps_, channels_);
    for (int b = 0; b < n; ++b) {
      Eigen::VectorXd z(dim());
      for (int i = 0; i < dim(); ++i) z(i) = gauss(rng);
      Scatter(mean_ + chol * z, out, b);
    }
    return out;
  }

  // Expected unweighted DSM loss of this (optimal) denoiser at sigma:
  // sum_i sigma^2 s_i / (sigma^2 + s_i) over eigenvalues s_i of S.
  double PosteriorVarianceTrace(double sigma) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
    double total = 0.0;
    for (int i = 0; i < dim(); ++i) {
      const double s = eig.eigenvalues()(i);
      total += sigma * sigma * s / (sigma * sigma + s);
    }
    return total;
  }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  int steps_, channels_;
  RowMatrixF live_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  std::vector<int> slots_;
};

// A fixed 4-dimensional Gaussian laid out as one horizon-1 window with one
// state and one action channel (4 live entries).
inline GaussianOracle FourDimOracle() {
  Eigen::VectorXd m(4);
  m << 0.5, -0.3, 0.2, 0.8;
  Eigen::MatrixXd a(4, 4);
  a << 0.8, 0.1, 0.0, 0.2,
       0.0, 0.6, 0.3, 0.0,
       0.1, 0.0, 0.5, 0.1,
       0.0, 0.2, 0.0, 0.7;
  Eigen::MatrixXd s = a * a.transpose() + 0.05 * Eigen::MatrixXd::Identity(4, 4);
  return GaussianOracle(2, 3, LiveMask(2, 1, 1), m, s);
}

}  // namespace gta::testing

#endif  // GTA_TESTS_SUPPORT_GAUSSIAN_ORACLE_H_
