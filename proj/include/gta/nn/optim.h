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

#ifndef GTA_NN_OPTIM_H_
#define GTA_NN_OPTIM_H_

#include <vector>

#include "gta/nn/layers.h"

namespace gta::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global gradient-norm clip; <= 0 disables.
  double max_grad_norm = 0.0;
};

class Adam {
 public:
  Adam(ParameterList parameters, AdamConfig config = {});

  // Applies one update with learning rate `lr` from the accumulated gradients
  // and clears them. Parameters that received no gradient are left untouched.
  void Step(double lr);
  void ZeroGrad() const { parameters_.ZeroGrad(); }
  int64_t steps() const { return steps_; }
  // Gradient norm seen by the last Step (before clipping).
  double last_grad_norm() const { return last_grad_norm_; }

 private:
  ParameterList parameters_;
  AdamConfig config_;
  std::vector<Matrix> m_, v_;
  int64_t steps_ = 0;
  double last_grad_norm_ = 0.0;
};

// Linear warmup over `warmup_steps`, then cosine decay from `base_lr` to
// `floor_lr` at `total_steps`.
double WarmupCosineLr(int64_t step, int64_t total_steps, int64_t warmup_steps,
                      double base_lr, double floor_lr);

}  // namespace gta::nn

#endif  // GTA_NN_OPTIM_H_
