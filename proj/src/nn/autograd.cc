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

#include "gta/nn/autograd.h"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace gta::nn {
namespace {

thread_local bool g_grad_enabled = true;

bool NeedsGrad(std::initializer_list<const Var*> inputs) {
  if (!g_grad_enabled) return false;
  for (const Var* v : inputs) {
    if ((*v)->requires_grad) return true;
  }
  return false;
}

Var MakeNode(Matrix value, std::vector<Var> inputs, bool record,
             std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (record) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return node;
}

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

// Vectorized logistic function; exp overflow for very negative inputs gives 0.
Matrix Sigmoid(const Matrix& x) { return ((-x.array()).exp() + Scalar(1)).inverse().matrix(); }

}  // namespace

void Node::AccumulateGrad(const Matrix& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var Constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return node;
}

Var Parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool GradEnabled() { return g_grad_enabled; }

void Backward(const Var& loss) {
  if (loss->value.size() != 1) {
    throw std::invalid_argument("Backward: loss must be a scalar");
  }
  if (!loss->requires_grad) return;
  // iterative post-order DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && child->backward && !visited.count(child)) {
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->AccumulateGrad(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->grad.size() == 0) continue;
    node->backward(*node);
    // interior gradients are not needed after propagation
    if (node != loss.get()) node->grad.resize(0, 0);
  }
}

Var Linear(const Var& x, const Var& w, const Var& b) {
  if (x->value.cols() != w->value.rows() || b->value.cols() != w->value.cols() ||
      b->value.rows() != 1) {
    throw std::invalid_argument("Linear: shape mismatch");
  }
  Matrix y = x->value * w->value;
  y.rowwise() += b->value.row(0);
  const bool record = NeedsGrad({&x, &w, &b});
  return MakeNode(std::move(y), {x, w, b}, record, [](Node& self) {
    Node& xi = *self.inputs[0];
    Node& wi = *self.inputs[1];
    Node& bi = *self.inputs[2];
    if (xi.requires_grad) xi.AccumulateGrad(self.grad * wi.value.transpose());
    if (wi.requires_grad) wi.AccumulateGrad(xi.value.transpose() * self.grad);
    if (bi.requires_grad) bi.AccumulateGrad(self.grad.colwise().sum());
  });
}

Var Add(const Var& a, const Var& b) {
  CheckSameShape(a->value, b->value, "Add");
  return MakeNode(a->value + b->value, {a, b}, NeedsGrad({&a, &b}), [](Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->AccumulateGrad(self.grad);
    }
  });
}

Var Sub(const Var& a, const Var& b) {
  CheckSameShape(a->value, b->value, "Sub");
  return MakeNode(a->value - b->value, {a, b}, NeedsGrad({&a, &b}), [](Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->AccumulateGrad(self.grad);
    if (self.inputs[1]->requires_grad) self.inputs[1]->AccumulateGrad(-self.grad);
  });
}

Var Mul(const Var& a, const Var& b) {
  CheckSameShape(a->value, b->value, "Mul");
  Matrix y = a->value.cwiseProduct(b->value);
  return MakeNode(std::move(y), {a, b}, NeedsGrad({&a, &b}), [](Node& self) {
    Node& ai = *self.inputs[0];
    Node& bi = *self.inputs[1];
    if (ai.requires_grad) ai.AccumulateGrad(self.grad.cwiseProduct(bi.value));
    if (bi.requires_grad) bi.AccumulateGrad(self.grad.cwiseProduct(ai.value));
  });
}

Var Scale(const Var& a, Scalar s) {
  return MakeNode(a->value * s, {a}, NeedsGrad({&a}), [s](Node& self) {
    self.inputs[0]->AccumulateGrad(self.grad * s);
  });
}

Var ScaleRows(const Var& a, const Matrix& row_scale) {
  if (row_scale.rows() != a->value.rows() || row_scale.cols() != 1) {
    throw std::invalid_argument("ScaleRows: shape mismatch");
  }
  Matrix y = a->value.array().colwise() * row_scale.col(0).array();
  return MakeNode(std::move(y), {a}, NeedsGrad({&a}), [row_scale](Node& self) {
    Matrix g = self.grad.array().colwise() * row_scale.col(0).array();
    self.inputs[0]->AccumulateGrad(g);
  });
}

Var AddConstant(const Var& a, const Matrix& c) {
  CheckSameShape(a->value, c, "AddConstant");
  return MakeNode(a->value + c, {a}, NeedsGrad({&a}), [](Node& self) {
    self.inputs[0]->AccumulateGrad(self.grad);
  });
}

Var MulConstant(const Var& a, const Matrix& c) {
  CheckSameShape(a->value, c, "MulConstant");
  return MakeNode(a->value.cwiseProduct(c), {a}, NeedsGrad({&a}), [c](Node& self) {
    self.inputs[0]->AccumulateGrad(self.grad.cwiseProduct(c));
  });
}

Var SiLU(const Var& x) {
  Matrix s = Sigmoid(x->value);
  Matrix y = x->value.cwiseProduct(s);
  const bool record = NeedsGrad({&x});
  if (!record) s.resize(0, 0);
  return MakeNode(std::move(y), {x}, record, [s = std::move(s)](Node& self) {
    const auto xv = self.inputs[0]->value.array();
    const auto sv = s.array();
    self.inputs[0]->AccumulateGrad(
        (self.grad.array() * sv * (Scalar(1) + xv * (Scalar(1) - sv))).matrix());
  });
}

Var Relu(const Var& x) {
  Matrix y = x->value.cwiseMax(Scalar(0));
  return MakeNode(std::move(y), {x}, NeedsGrad({&x}), [](Node& self) {
    const Matrix& xv = self.inputs[0]->value;
    Matrix g = (xv.array() > Scalar(0)).select(self.grad, Scalar(0));
    self.inputs[0]->AccumulateGrad(g);
  });
}

Var Tanh(const Var& x) {
  Matrix y = x->value.array().tanh().matrix();
  return MakeNode(y, {x}, NeedsGrad({&x}), [y](Node& self) {
    Matrix d = (Scalar(1) - y.array().square()).matrix();
    self.inputs[0]->AccumulateGrad(self.grad.cwiseProduct(d));
  });
}

Var LayerNorm(const Var& x, const Var& gamma, const Var& beta, Scalar eps) {
  const Matrix& xv = x->value;
  const auto n = xv.rows();
  const auto c = xv.cols();
  if (gamma->value.cols() != c || beta->value.cols() != c) {
    throw std::invalid_argument("LayerNorm: shape mismatch");
  }
  Matrix xhat(n, c);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Scalar mean = xv.row(r).mean();
    const Scalar var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = xhat.array().rowwise() * gamma->value.row(0).array();
  y.rowwise() += beta->value.row(0);
  const bool record = NeedsGrad({&x, &gamma, &beta});
  return MakeNode(std::move(y), {x, gamma, beta}, record,
                  [xhat, inv_std](Node& self) {
    Node& xi = *self.inputs[0];
    Node& gi = *self.inputs[1];
    Node& bi = *self.inputs[2];
    const Matrix& g = self.grad;
    if (gi.requires_grad) gi.AccumulateGrad(g.cwiseProduct(xhat).colwise().sum());
    if (bi.requires_grad) bi.AccumulateGrad(g.colwise().sum());
    if (xi.requires_grad) {
      const Scalar cols = static_cast<Scalar>(g.cols());
      Matrix dxhat = g.array().rowwise() * gi.value.row(0).array();
      Matrix dx(g.rows(), g.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const Scalar sum_d = dxhat.row(r).sum();
        const Scalar sum_dx = dxhat.row(r).dot(xhat.row(r));
        dx.row(r) = (inv_std(r) / cols) *
                    (cols * dxhat.row(r).array() - sum_d -
                     xhat.row(r).array() * sum_dx);
      }
      xi.AccumulateGrad(dx);
    }
  });
}

Var ConcatCols(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows()) {
    throw std::invalid_argument("ConcatCols: row mismatch");
  }
  const auto ca = a->value.cols();
  const auto cb = b->value.cols();
  Matrix y(a->value.rows(), ca + cb);
  y.leftCols(ca) = a->value;
  y.rightCols(cb) = b->value;
  return MakeNode(std::move(y), {a, b}, NeedsGrad({&a, &b}), [ca, cb](Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->AccumulateGrad(self.grad.leftCols(ca));
    if (self.inputs[1]->requires_grad) self.inputs[1]->AccumulateGrad(self.grad.rightCols(cb));
  });
}

namespace {

Matrix TransposeBlocksValue(const Matrix& x, int batch) {
  const auto rows = x.rows() / batch;
  const auto cols = x.cols();
  Matrix y(batch * cols, rows);
  for (int b = 0; b < batch; ++b) {
    y.middleRows(b * cols, cols) = x.middleRows(b * rows, rows).transpose();
  }
  return y;
}

}  // namespace

Var TransposeBlocks(const Var& x, int batch) {
  if (batch <= 0 || x->value.rows() % batch != 0) {
    throw std::invalid_argument("TransposeBlocks: rows not divisible by batch");
  }
  return MakeNode(TransposeBlocksValue(x->value, batch), {x}, NeedsGrad({&x}),
                  [batch](Node& self) {
    self.inputs[0]->AccumulateGrad(TransposeBlocksValue(self.grad, batch));
  });
}

Var PoolPairs(const Var& x, int batch, int steps) {
  if (x->value.rows() != static_cast<Eigen::Index>(batch) * steps) {
    throw std::invalid_argument("PoolPairs: shape mismatch");
  }
  const int out_steps = (steps + 1) / 2;
  Matrix y(batch * out_steps, x->value.cols());
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < out_steps; ++t) {
      const int r0 = b * steps + 2 * t;
      if (2 * t + 1 < steps) {
        y.row(b * out_steps + t) = Scalar(0.5) * (x->value.row(r0) + x->value.row(r0 + 1));
      } else {
        y.row(b * out_steps + t) = x->value.row(r0);
      }
    }
  }
  return MakeNode(std::move(y), {x}, NeedsGrad({&x}),
                  [batch, steps, out_steps](Node& self) {
    Matrix g(static_cast<Eigen::Index>(batch) * steps, self.grad.cols());
    for (int b = 0; b < batch; ++b) {
      for (int t = 0; t < out_steps; ++t) {
        const int r0 = b * steps + 2 * t;
        const auto gr = self.grad.row(b * out_steps + t);
        if (2 * t + 1 < steps) {
          g.row(r0) = Scalar(0.5) * gr;
          g.row(r0 + 1) = Scalar(0.5) * gr;
        } else {
          g.row(r0) = gr;
        }
      }
    }
    self.inputs[0]->AccumulateGrad(g);
  });
}

Var RepeatPairs(const Var& x, int batch, int steps_out) {
  const int in_steps = (steps_out + 1) / 2;
  if (x->value.rows() != static_cast<Eigen::Index>(batch) * in_steps) {
    throw std::invalid_argument("RepeatPairs: shape mismatch");
  }
  Matrix y(static_cast<Eigen::Index>(batch) * steps_out, x->value.cols());
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < steps_out; ++t) {
      y.row(b * steps_out + t) = x->value.row(b * in_steps + t / 2);
    }
  }
  return MakeNode(std::move(y), {x}, NeedsGrad({&x}),
                  [batch, steps_out, in_steps](Node& self) {
    Matrix g = Matrix::Zero(static_cast<Eigen::Index>(batch) * in_steps, self.grad.cols());
    for (int b = 0; b < batch; ++b) {
      for (int t = 0; t < steps_out; ++t) {
        g.row(b * in_steps + t / 2) += self.grad.row(b * steps_out + t);
      }
    }
    self.inputs[0]->AccumulateGrad(g);
  });
}

Var BroadcastBlocks(const Var& e, int steps) {
  const auto batch = e->value.rows();
  Matrix y(batch * steps, e->value.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    y.middleRows(b * steps, steps).rowwise() = e->value.row(b);
  }
  return MakeNode(std::move(y), {e}, NeedsGrad({&e}), [steps](Node& self) {
    const auto batch = self.grad.rows() / steps;
    Matrix g(batch, self.grad.cols());
    for (Eigen::Index b = 0; b < batch; ++b) {
      g.row(b) = self.grad.middleRows(b * steps, steps).colwise().sum();
    }
    self.inputs[0]->AccumulateGrad(g);
  });
}

Var SelectRows(const Var& a, const Var& fill, const std::vector<bool>& use_fill) {
  if (static_cast<Eigen::Index>(use_fill.size()) != a->value.rows() ||
      fill->value.rows() != 1 || fill->value.cols() != a->value.cols()) {
    throw std::invalid_argument("SelectRows: shape mismatch");
  }
  Matrix y = a->value;
  for (size_t r = 0; r < use_fill.size(); ++r) {
    if (use_fill[r]) y.row(r) = fill->value.row(0);
  }
  return MakeNode(std::move(y), {a, fill}, NeedsGrad({&a, &fill}),
                  [use_fill](Node& self) {
    Node& ai = *self.inputs[0];
    Node& fi = *self.inputs[1];
    Matrix ga = self.grad;
    Matrix gf = Matrix::Zero(1, self.grad.cols());
    for (size_t r = 0; r < use_fill.size(); ++r) {
      if (use_fill[r]) {
        gf += self.grad.row(r);
        ga.row(r).setZero();
      }
    }
    if (ai.requires_grad) ai.AccumulateGrad(ga);
    if (fi.requires_grad) fi.AccumulateGrad(gf);
  });
}

Var SliceCols(const Var& a, int begin, int count) {
  if (begin < 0 || begin + count > a->value.cols()) {
    throw std::invalid_argument("SliceCols: out of range");
  }
  Matrix y = a->value.middleCols(begin, count);
  return MakeNode(std::move(y), {a}, NeedsGrad({&a}), [begin, count](Node& self) {
    Node& ai = *self.inputs[0];
    Matrix g = Matrix::Zero(ai.value.rows(), ai.value.cols());
    g.middleCols(begin, count) = self.grad;
    ai.AccumulateGrad(g);
  });
}

Var WeightedSse(const Var& pred, const Matrix& target, const Matrix& weight,
                Scalar scale) {
  CheckSameShape(pred->value, target, "WeightedSse");
  CheckSameShape(pred->value, weight, "WeightedSse");
  Matrix diff = pred->value - target;
  Matrix out(1, 1);
  // accumulate in double for a stable scalar
  out(0, 0) = static_cast<Scalar>(
      scale * (weight.cast<double>().array() * diff.cast<double>().array().square()).sum());
  return MakeNode(std::move(out), {pred}, NeedsGrad({&pred}),
                  [diff, weight, scale](Node& self) {
    const Scalar g = self.grad(0, 0);
    self.inputs[0]->AccumulateGrad(
        (Scalar(2) * scale * g) * weight.cwiseProduct(diff));
  });
}

Var MeanSquaredError(const Var& a, const Var& b) {
  CheckSameShape(a->value, b->value, "MeanSquaredError");
  Matrix diff = a->value - b->value;
  const Scalar n = static_cast<Scalar>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return MakeNode(std::move(out), {a, b}, NeedsGrad({&a, &b}), [diff, n](Node& self) {
    const Scalar g = self.grad(0, 0) * Scalar(2) / n;
    if (self.inputs[0]->requires_grad) self.inputs[0]->AccumulateGrad(g * diff);
    if (self.inputs[1]->requires_grad) self.inputs[1]->AccumulateGrad(-g * diff);
  });
}

Var Mean(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a->value.mean();
  return MakeNode(std::move(out), {a}, NeedsGrad({&a}), [](Node& self) {
    Node& ai = *self.inputs[0];
    const Scalar g = self.grad(0, 0) / static_cast<Scalar>(ai.value.size());
    ai.AccumulateGrad(Matrix::Constant(ai.value.rows(), ai.value.cols(), g));
  });
}

}  // namespace gta::nn
