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

#include <bdsg/density.hpp>
#include <bdsg/random.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace bdsg {

struct GaussianComponent {
  double weight = 1.0;
  Point mean;
  Eigen::MatrixXd covariance;
};

/// Closed-form density sum_k w_k N(x; mu_k, Sigma_k).
class GaussianMixture final : public DensityModel {
 public:
  /// Throws ConfigError unless weights are in (0, 1] and sum to one within
  /// 1e-12, and every covariance is symmetric positive-definite.
  explicit GaussianMixture(std::vector<GaussianComponent> components);

  /// {"components": [{"weight": w, "mean": [...], "covariance": [[...], ...]}]}
  static GaussianMixture from_json(const std::string& text);
  static GaussianMixture load(const std::filesystem::path& path);
  std::string to_json() const;

  static GaussianMixture standard_normal(int dim);

  int dim() const override { return dim_; }
  std::string kind() const override { return "cfs"; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }

  using DensityModel::log_density;
  Vector log_density(const Batch& x) const override;
  ad::Var log_density(ad::Tape& tape, ad::Var x) const override;

  /// n i.i.d. draws; the component of each draw is chosen by weight, so the
  /// per-component counts are multinomial.
  Batch sample(Eigen::Index n, Rng& rng) const;

  /// Same draws, also reporting the component index of every row.
  Batch sample(Eigen::Index n, Rng& rng, std::vector<int>& labels) const;

 private:
  std::vector<GaussianComponent> components_;
  int dim_ = 0;
  // Per component: L^{-T} where Sigma = L L^T, and log w - log|L| - d/2 log 2pi.
  std::vector<Matrix> whiten_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<double> log_scale_;
};

}  // namespace bdsg
