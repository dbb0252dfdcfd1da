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

struct SpectralNormResult {
  Matrix weight;
  double sigma = 0.0;  // power-iteration estimate of the top singular value
};

/// Power iteration on w^T w starting from `right` (updated in place).
/// Returns the estimate |w v| for the final unit vector v.
double power_iteration(const Matrix& w, Vector& right, int iters);

/// Scales `weight` by min(1, target / sigma_hat). With iters > 1 the iteration
/// continues until converged, so the result never exceeds the target. A zero
/// matrix comes back unchanged with sigma_hat = 0.
SpectralNormResult spectral_normalize(const Matrix& weight, double target_lipschitz, int iters, std::uint64_t seed);

/// Keeps one warm-started power-iteration vector per layer of an Mlp so that a
/// single iteration per training step tracks the top singular value.
class SpectralNormalizer {
 public:
  SpectralNormalizer() = default;
  SpectralNormalizer(const Mlp& model, double target_lipschitz, std::uint64_t seed);

  /// Rescales every weight matrix of `model` in place.
  void apply(Mlp& model, int iters);

  double target() const noexcept { return target_; }

 private:
  double target_ = 0.9;
  std::vector<Vector> vectors_;
};

/// Product of the layer spectral norms (exact, via SVD). Upper bound on the
/// Lipschitz constant when the activation is 1-Lipschitz.
double lipschitz_upper_bound(const Mlp& model);

}  // namespace bdsg
