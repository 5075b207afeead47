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

#include "gta/nn/layers.h"

#include <cmath>
#include <stdexcept>

namespace gta::nn {

void ParameterList::Add(std::string name, Var parameter) {
  entries_.emplace_back(std::move(name), std::move(parameter));
}

void ParameterList::Append(const std::string& prefix, const ParameterList& other) {
  for (const auto& [name, p] : other.entries_) Add(prefix + name, p);
}

int64_t ParameterList::NumScalars() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.second->value.size();
  return n;
}

void ParameterList::ZeroGrad() const {
  for (const auto& e : entries_) e.second->ZeroGrad();
}

void ParameterList::CopyValuesFrom(const ParameterList& other) const {
  if (other.size() != size()) throw std::invalid_argument("parameter layout mismatch");
  for (size_t i = 0; i < size(); ++i) entries_[i].second->value = other[i].second->value;
}

void ParameterList::SoftUpdateFrom(const ParameterList& other, Scalar tau) const {
  if (other.size() != size()) throw std::invalid_argument("parameter layout mismatch");
  for (size_t i = 0; i < size(); ++i) {
    Matrix& v = entries_[i].second->value;
    v = (Scalar(1) - tau) * v + tau * other[i].second->value;
  }
}

std::vector<Matrix> ParameterList::SnapshotValues() const {
  std::vector<Matrix> out;
  out.reserve(size());
  for (const auto& e : entries_) out.push_back(e.second->value);
  return out;
}

void ParameterList::RestoreValues(const std::vector<Matrix>& values) const {
  if (values.size() != size()) throw std::invalid_argument("parameter layout mismatch");
  for (size_t i = 0; i < size(); ++i) entries_[i].second->value = values[i];
}

LinearLayer::LinearLayer(int in, int out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(in, out);
  Matrix b(1, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(u(rng));
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<Scalar>(u(rng));
  weight_ = Parameter(std::move(w));
  bias_ = Parameter(std::move(b));
}

ParameterList LinearLayer::Parameters() const {
  ParameterList p;
  p.Add("weight", weight_);
  p.Add("bias", bias_);
  return p;
}

void LinearLayer::ScaleInit(Scalar factor) {
  weight_->value *= factor;
  bias_->value.setZero();
}

LayerNormLayer::LayerNormLayer(int dim)
    : gamma_(Parameter(Matrix::Ones(1, dim))),
      beta_(Parameter(Matrix::Zero(1, dim))) {}

ParameterList LayerNormLayer::Parameters() const {
  ParameterList p;
  p.Add("gamma", gamma_);
  p.Add("beta", beta_);
  return p;
}

Var Activate(const Var& x, Activation activation) {
  return activation == Activation::kRelu ? Relu(x) : SiLU(x);
}

Mlp::Mlp(const std::vector<int>& sizes, Activation activation,
         std::mt19937_64& rng)
    : activation_(activation) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp needs >= 2 sizes");
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers_.emplace_back(sizes[i], sizes[i + 1], rng);
  }
}

Var Mlp::operator()(const Var& x) const {
  Var h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size()) h = Activate(h, activation_);
  }
  return h;
}

ParameterList Mlp::Parameters() const {
  ParameterList p;
  for (size_t i = 0; i < layers_.size(); ++i) {
    p.Append("l" + std::to_string(i) + ".", layers_[i].Parameters());
  }
  return p;
}

}  // namespace gta::nn
