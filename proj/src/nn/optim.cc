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

#include "gta/nn/optim.h"

#include <cmath>
#include <numbers>

namespace gta::nn {

Adam::Adam(ParameterList parameters, AdamConfig config)
    : parameters_(std::move(parameters)), config_(config) {
  for (const auto& [name, p] : parameters_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::Step(double lr) {
  ++steps_;
  double sq = 0.0;
  for (const auto& [name, p] : parameters_) {
    if (p->grad.size() != 0) sq += p->grad.cast<double>().squaredNorm();
  }
  last_grad_norm_ = std::sqrt(sq);
  Scalar clip = 1;
  if (config_.max_grad_norm > 0.0 && last_grad_norm_ > config_.max_grad_norm) {
    clip = static_cast<Scalar>(config_.max_grad_norm / last_grad_norm_);
  }
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  const Scalar b1 = static_cast<Scalar>(config_.beta1);
  const Scalar b2 = static_cast<Scalar>(config_.beta2);
  const Scalar step = static_cast<Scalar>(lr / bc1);
  const Scalar inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
  const Scalar eps = static_cast<Scalar>(config_.eps);
  for (size_t i = 0; i < parameters_.size(); ++i) {
    Node& p = *parameters_[i].second;
    if (p.grad.size() == 0) continue;
    const Matrix g = p.grad * clip;
    m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
    v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.value.array() -= step * m_[i].array() /
                       (v_[i].array().sqrt() * inv_sqrt_bc2 + eps);
  }
  parameters_.ZeroGrad();
}

double WarmupCosineLr(int64_t step, int64_t total_steps, int64_t warmup_steps,
                      double base_lr, double floor_lr) {
  if (warmup_steps > 0 && step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  const int64_t decay = total_steps - warmup_steps;
  if (decay <= 0) return base_lr;
  const double progress =
      std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(decay));
  return floor_lr + 0.5 * (base_lr - floor_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace gta::nn
