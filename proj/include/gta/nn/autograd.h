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

#ifndef GTA_NN_AUTOGRAD_H_
#define GTA_NN_AUTOGRAD_H_

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. Each op returns a new graph node; `Backward` walks the graph in
// reverse topological order. Graph recording is skipped when no input needs a
// gradient or when a NoGradGuard is active, so inference only reads parameter
// values and is safe to run from several threads.

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace gta::nn {

#ifdef GTA_NN_DOUBLE
using Scalar = double;
#else
using Scalar = float;
#endif

using Matrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void AccumulateGrad(const Matrix& g);
  void ZeroGrad() { grad.resize(0, 0); }
};

using Var = std::shared_ptr<Node>;

Var Constant(Matrix value);
Var Parameter(Matrix value);

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

// Seeds d(loss)/d(loss) = 1 and back-propagates. `loss` must be 1x1.
void Backward(const Var& loss);

// x (N x in) * w (in x out) + b (1 x out)
Var Linear(const Var& x, const Var& w, const Var& b);
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, Scalar s);
// Multiplies row r by row_scale(r). row_scale is a constant N x 1 column.
Var ScaleRows(const Var& a, const Matrix& row_scale);
Var AddConstant(const Var& a, const Matrix& c);
// Elementwise product with a constant matrix of the same shape.
Var MulConstant(const Var& a, const Matrix& c);

Var SiLU(const Var& x);
Var Relu(const Var& x);
Var Tanh(const Var& x);

// Row-wise layer normalization with affine gamma/beta (1 x C).
Var LayerNorm(const Var& x, const Var& gamma, const Var& beta,
              Scalar eps = Scalar(1e-5));

Var ConcatCols(const Var& a, const Var& b);

// Treats x as `batch` stacked blocks of (rows x cols) and transposes each
// block: (batch*rows) x cols -> (batch*cols) x rows.
Var TransposeBlocks(const Var& x, int batch);

// Averages consecutive row pairs inside each of `batch` blocks of `steps`
// rows. An odd trailing row is kept as-is. Output has ceil(steps/2) rows per
// block.
Var PoolPairs(const Var& x, int batch, int steps);
// Inverse resampling of PoolPairs: row t of each output block copies row t/2
// of the input block. Output has `steps_out` rows per block.
Var RepeatPairs(const Var& x, int batch, int steps_out);

// (B x W) -> (B*steps x W), repeating each row `steps` times.
Var BroadcastBlocks(const Var& e, int steps);

// Row r of the output is `fill` (1 x C) where use_fill[r], else a.row(r).
Var SelectRows(const Var& a, const Var& fill, const std::vector<bool>& use_fill);

// Column slice [begin, begin + count).
Var SliceCols(const Var& a, int begin, int count);

// scale * sum(weight .* (pred - target)^2) as a 1x1 node.
Var WeightedSse(const Var& pred, const Matrix& target, const Matrix& weight,
                Scalar scale);
// mean((a - b)^2) over all entries, gradient flows into both.
Var MeanSquaredError(const Var& a, const Var& b);
Var Mean(const Var& a);

}  // namespace gta::nn

#endif  // GTA_NN_AUTOGRAD_H_
