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

#ifndef GTA_NN_LAYERS_H_
#define GTA_NN_LAYERS_H_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gta/nn/autograd.h"

namespace gta::nn {

// Ordered (name, parameter) list. Order is the serialization order.
class ParameterList {
 public:
  void Add(std::string name, Var parameter);
  void Append(const std::string& prefix, const ParameterList& other);

  size_t size() const { return entries_.size(); }
  const std::pair<std::string, Var>& operator[](size_t i) const {
    return entries_[i];
  }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  int64_t NumScalars() const;
  void ZeroGrad() const;
  // Copies parameter values from `other` (same layout).
  void CopyValuesFrom(const ParameterList& other) const;
  // this <- (1 - tau) * this + tau * other
  void SoftUpdateFrom(const ParameterList& other, Scalar tau) const;
  std::vector<Matrix> SnapshotValues() const;
  void RestoreValues(const std::vector<Matrix>& values) const;

 private:
  std::vector<std::pair<std::string, Var>> entries_;
};

// y = x W + b, weights uniform in +-1/sqrt(in).
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(int in, int out, std::mt19937_64& rng);

  Var operator()(const Var& x) const { return Linear(x, weight_, bias_); }
  int in() const { return static_cast<int>(weight_->value.rows()); }
  int out() const { return static_cast<int>(weight_->value.cols()); }
  ParameterList Parameters() const;

  // Scales the initial weights and zeroes the bias.
  void ScaleInit(Scalar factor);

 private:
  Var weight_, bias_;
};

class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  explicit LayerNormLayer(int dim);

  Var operator()(const Var& x) const { return LayerNorm(x, gamma_, beta_); }
  ParameterList Parameters() const;

 private:
  Var gamma_, beta_;
};

enum class Activation { kRelu, kSiLU };

Var Activate(const Var& x, Activation activation);

// Dense stack; the activation follows every layer except the last.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& sizes, Activation activation,
      std::mt19937_64& rng);

  Var operator()(const Var& x) const;
  ParameterList Parameters() const;
  const std::vector<LinearLayer>& layers() const { return layers_; }

 private:
  std::vector<LinearLayer> layers_;
  Activation activation_ = Activation::kRelu;
};

}  // namespace gta::nn

#endif  // GTA_NN_LAYERS_H_
