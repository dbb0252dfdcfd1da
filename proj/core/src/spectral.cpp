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

#include <bdsg/error.hpp>
#include <bdsg/spectral.hpp>

#include <algorithm>
#include <random>

namespace bdsg {

namespace {

Vector random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  const double norm = v.norm();
  if (norm == 0.0) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / norm;
}

void check_target(double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw ConfigError("target Lipschitz constant must lie in (0, 1)");
  }
}

// Freeze-time refinement: keeps iterating past the requested count until v is
// an eigenvector of w^T w to working precision. The plain estimate |w v|
// approaches sigma from below, so stopping early would let the scaled matrix
// overshoot the target.
double settled_power_iteration(const Matrix& w, Vector& right, int iters) {
  double sigma = power_iteration(w, right, iters);
  if (iters < 2) return sigma;
  constexpr int kMaxExtra = 20000;
  for (int extra = 0; extra < kMaxExtra && sigma > 0.0; ++extra) {
    const Vector gram = w.transpose() * (w * right);
    if ((gram - sigma * sigma * right).norm() <= 1e-10 * sigma * sigma) break;
    sigma = power_iteration(w, right, 1);
  }
  return sigma;
}

}  // namespace

double power_iteration(const Matrix& w, Vector& right, int iters) {
  if (iters < 1) {
    throw ConfigError("power iteration needs at least one iteration");
  }
  if (right.size() != w.cols()) {
    throw ShapeError("power iteration vector does not match weight columns");
  }
  for (int it = 0; it < iters; ++it) {
    Vector left = w * right;
    const double ln = left.norm();
    if (ln == 0.0) return 0.0;
    left /= ln;
    Vector next = w.transpose() * left;
    const double rn = next.norm();
    if (rn == 0.0) return 0.0;
    right = next / rn;
  }
  return (w * right).norm();
}

SpectralNormResult spectral_normalize(const Matrix& weight, double target_lipschitz, int iters, std::uint64_t seed) {
  check_target(target_lipschitz);
  if (iters < 1) {
    throw ConfigError("spectral_normalize: iters must be >= 1");
  }
  if (weight.size() == 0 || weight.isZero(0.0)) {
    return {weight, 0.0};
  }
  std::mt19937_64 rng(seed);
  Vector v = random_unit(weight.cols(), rng);
  const double sigma = settled_power_iteration(weight, v, iters);
  const double factor = sigma > 0.0 ? std::min(1.0, target_lipschitz / sigma) : 1.0;
  return {weight * factor, sigma};
}

SpectralNormalizer::SpectralNormalizer(const Mlp& model, double target_lipschitz, std::uint64_t seed)
    : target_(target_lipschitz) {
  check_target(target_lipschitz);
  std::mt19937_64 rng(seed);
  for (const auto& layer : model.layers()) {
    vectors_.push_back(random_unit(layer.weight.cols(), rng));
  }
}

void SpectralNormalizer::apply(Mlp& model, int iters) {
  auto& layers = model.layers();
  if (layers.size() != vectors_.size()) {
    throw ShapeError("spectral normalizer was built for a different model");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix& w = layers[l].weight;
    const double sigma = settled_power_iteration(w, vectors_[l], iters);
    if (sigma > target_) {
      w *= target_ / sigma;
    }
  }
}

double lipschitz_upper_bound(const Mlp& model) {
  double bound = 1.0;
  for (const auto& layer : model.layers()) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(layer.weight);
    bound *= svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  }
  return bound;
}

}  // namespace bdsg
