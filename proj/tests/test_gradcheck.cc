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

// Finite-difference checks of every autograd op and of the full denoiser
// objective. Built against a double-precision copy of the library.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "gta/denoiser.h"
#include "gta/nn/autograd.h"
#include "gta/sampler.h"

static_assert(sizeof(gta::nn::Scalar) == sizeof(double), "gradcheck needs double precision");

namespace gta::nn {
namespace {

Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Largest relative error between analytic and central-difference gradients
// of `loss` with respect to each input.
double MaxRelativeError(const std::vector<Var>& inputs, const std::function<Var()>& loss,
                        double step = 1e-6) {
  for (const auto& v : inputs) v->ZeroGrad();
  Backward(loss());
  double worst = 0.0;
  for (const auto& v : inputs) {
    REQUIRE(v->grad.size() == v->value.size());
    for (Eigen::Index i = 0; i < v->value.size(); ++i) {
      const double saved = v->value.data()[i];
      double fd;
      {
        NoGradGuard guard;
        v->value.data()[i] = saved + step;
        const double up = loss()->value(0, 0);
        v->value.data()[i] = saved - step;
        const double down = loss()->value(0, 0);
        v->value.data()[i] = saved;
        fd = (up - down) / (2.0 * step);
      }
      const double an = v->grad.data()[i];
      const double err = std::abs(an - fd) / std::max(1.0, std::abs(an) + std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// Reduces any output to a scalar with fixed random weights.
Var Reduce(const Var& out, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Matrix target = RandomMatrix(out->value.rows(), out->value.cols(), rng);
  const Matrix weight = RandomMatrix(out->value.rows(), out->value.cols(), rng).cwiseAbs();
  return WeightedSse(out, target, weight, 0.5);
}

constexpr double kOpTolerance = 1e-6;

TEST_CASE("elementwise and linear ops") {
  std::mt19937_64 rng(1);
  auto a = Parameter(RandomMatrix(5, 4, rng));
  auto b = Parameter(RandomMatrix(5, 4, rng));
  auto w = Parameter(RandomMatrix(4, 3, rng));
  auto bias = Parameter(RandomMatrix(1, 3, rng));
  const Matrix c = RandomMatrix(5, 4, rng);
  const Matrix rows = RandomMatrix(5, 1, rng);
  CHECK(MaxRelativeError({a, w, bias}, [&] { return Reduce(Linear(a, w, bias), 2); }) < kOpTolerance);
  CHECK(MaxRelativeError({a, b}, [&] { return Reduce(Add(a, b), 3); }) < kOpTolerance);
  CHECK(MaxRelativeError({a, b}, [&] { return Reduce(Sub(a, b), 4); }) < kOpTolerance);
  CHECK(MaxRelativeError({a, b}, [&] { return Reduce(Mul(a, b), 5); }) < kOpTolerance);
  CHECK(MaxRelativeError({a}, [&] { return Reduce(Scale(a, -1.7), 6); }) < kOpTolerance);
  CHECK(MaxRelativeError({a}, [&] { return Reduce(ScaleRows(a, rows), 7); }) < kOpTolerance);
  CHECK(MaxRelativeError({a}, [&] { return Reduce(AddConstant(a, c), 8); }) < kOpTolerance);
  CHECK(MaxRelativeError({a}, [&] { return Reduce(MulConstant(a, c), 9); }) < kOpTolerance);
}

TEST_CASE("activations and normalization") {
  std::mt19937_64 rng(10);
  auto x = Parameter(RandomMatrix(6, 5, rng));
  // keep ReLU inputs away from the kink
  for (Eigen::Index i = 0; i < x->value.size(); ++i) {
    double& v = x->value.data()[i];
    if (std::abs(v) < 0.05) v = 0.1;
  }
  auto gamma = Parameter(RandomMatrix(1, 5, rng));
  auto beta = Parameter(RandomMatrix(1, 5, rng));
  CHECK(MaxRelativeError({x}, [&] { return Reduce(SiLU(x), 11); }) < kOpTolerance);
  CHECK(MaxRelativeError({x}, [&] { return Reduce(Relu(x), 12); }) < kOpTolerance);
  CHECK(MaxRelativeError({x}, [&] { return Reduce(Tanh(x), 13); }) < kOpTolerance);
  CHECK(MaxRelativeError({x, gamma, beta}, [&] { return Reduce(LayerNorm(x, gamma, beta), 14); }) <
        kOpTolerance);
}

TEST_CASE("shape ops") {
  std::mt19937_64 rng(20);
  // 2 blocks of 5 steps x 3 channels
  auto x = Parameter(RandomMatrix(10, 3, rng));
  auto y = Parameter(RandomMatrix(10, 2, rng));
  auto e = Parameter(RandomMatrix(2, 3, rng));
  auto fill = Parameter(RandomMatrix(1, 3, rng));
  const std::vector<bool> use_fill = {true, false, false, true, false, false, false, true, false, false};
  CHECK(MaxRelativeError({x, y}, [&] { return Reduce(ConcatCols(x, y), 21); }) < kOpTolerance);
  CHECK(MaxRelativeError({x}, [&] { return Reduce(TransposeBlocks(x, 2), 22); }) < kOpTolerance);
  CHECK(MaxRelativeError({x}, [&] { return Reduce(PoolPairs(x, 2, 5), 23); }) < kOpTolerance);
  CHECK(MaxRelativeError({x}, [&] { return Reduce(RepeatPairs(x, 2, 9), 24); }) < kOpTolerance);
  CHECK(MaxRelativeError({e}, [&] { return Reduce(BroadcastBlocks(e, 4), 25); }) < kOpTolerance);
  CHECK(MaxRelativeError({x, fill}, [&] { return Reduce(SelectRows(x, fill, use_fill), 26); }) <
        kOpTolerance);
  CHECK(MaxRelativeError({x}, [&] { return Reduce(SliceCols(x, 1, 2), 27); }) < kOpTolerance);
}

TEST_CASE("losses") {
  std::mt19937_64 rng(30);
  auto a = Parameter(RandomMatrix(4, 3, rng));
  auto b = Parameter(RandomMatrix(4, 3, rng));
  CHECK(MaxRelativeError({a, b}, [&] { return MeanSquaredError(a, b); }) < kOpTolerance);
  CHECK(MaxRelativeError({a}, [&] { return Reduce(Mean(a), 31); }) < kOpTolerance);
  CHECK(MaxRelativeError({a}, [&] { return Reduce(a, 32); }) < kOpTolerance);
}

TEST_CASE("shared subgraphs accumulate gradients") {
  std::mt19937_64 rng(40);
  auto a = Parameter(RandomMatrix(3, 3, rng));
  CHECK(MaxRelativeError({a}, [&] {
          auto h = Tanh(a);
          return Reduce(Add(Mul(h, h), Scale(h, 0.3)), 41);
        }) < kOpTolerance);
}

TEST_CASE("full denoiser objective on a width-8 model") {
  DenoiserConfig config;
  config.horizon = 4;
  config.obs_dim = 2;
  config.act_dim = 1;
  config.n_blocks = 3;
  config.width = 8;
  config.time_embed_dim = 8;
  config.cond_embed_dim = 8;
  DenoiserHandle handle(config, 3);
  // perturb the zero-initialized layers so every path carries gradient
  std::mt19937_64 rng(50);
  for (const auto& [name, p] : handle.parameters()) {
    p->value += RandomMatrix(p->value.rows(), p->value.cols(), rng, 0.1);
  }
  const int batch = 3;
  const int steps = config.steps();
  const Matrix x_in = RandomMatrix(batch * steps, config.channels(), rng);
  const Matrix target = RandomMatrix(batch * steps, config.channels(), rng);
  Matrix weight(batch * steps, config.channels());
  const RowMatrixF mask = LiveMask(steps, config.obs_dim, config.act_dim);
  for (int b = 0; b < batch; ++b) weight.middleRows(b * steps, steps) = mask.cast<double>();
  const std::vector<double> c_noise = {-1.0, 0.2, 0.9};
  const std::vector<double> cond = {0.3, 0.7, 0.1};
  const std::vector<bool> use_null = {false, true, false};

  std::vector<Var> params;
  for (const auto& entry : handle.parameters()) params.push_back(entry.second);
  const double err = MaxRelativeError(params, [&] {
    return WeightedSse(handle.NetworkOutput(x_in, c_noise, cond, use_null), target, weight,
                       1.0 / batch);
  });
  MESSAGE("max relative gradient error " << err);
  CHECK(err <= 1e-3);
}

}  // namespace
}  // namespace gta::nn
