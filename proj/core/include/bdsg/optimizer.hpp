// Copyright 2026 The BDSG Authors.
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

#pragma once

#include <bdsg/mlp.hpp>
#include <bdsg/types.hpp>

#include <cstdint>
#include <vector>

namespace bdsg {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-8;
};

/// Adaptive-moment optimizer state. Moments are allocated on the first step
/// and mirror the shapes of the parameters they track.
struct OptimizerState {
  AdamOptions options;
  std::uint64_t step_count = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// One bias-corrected Adam update of `params`. Throws NumericError, leaving
/// both params and state untouched, if any gradient entry is non-finite.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, OptimizerState& state);

inline void adam_step(Mlp& model, const std::vector<Matrix>& grads, OptimizerState& state) {
  adam_step(model.parameters(), grads, state);
}

}  // namespace bdsg
