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

// Boundary generator B(z; theta). Training minimizes
//
//   L = L0 + lambda1 * L1 + lambda2 * L2
//   L0 = mean_i p(B(z_i))                                  (density at the samples)
//   L1 = mean_i min_j |B(z_i) - x_j|                       (distance to the data)
//   L2 = mean_i mean_{j != i} |z_i - z_j| / (|B(z_i) - B(z_j)| + eps_div)
//
// L0 pushes samples toward low density, L1 keeps them near the data set and
// L2 keeps them spread out.

#include <bdsg/density.hpp>
#include <bdsg/mlp.hpp>
#include <bdsg/optimizer.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bdsg {

struct BdsgHyperparams {
  double lambda1 = 0.3;
  double lambda2 = 0.025;
  int sample_size = 1024;  // M
  int batch_size = 256;    // N
  int epochs = 3000;
  std::uint64_t seed = 0;
  double eps_div = 1e-8;
  AdamOptions adam{};

  /// Throws ConfigError unless 1 <= N <= M, lambdas >= 0, eps_div > 0 and
  /// epochs >= 0.
  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double l0 = 0.0;
  double l1 = 0.0;  // unweighted
  double l2 = 0.0;  // unweighted
  int epoch = 0;
};

struct BoundaryModel {
  Mlp network;
  int latent_dim = 0;
  std::vector<LossBreakdown> history;
};

// Differentiable loss terms. `outputs` holds B(z) for the batch (N x d).
ad::Var loss_l0(ad::Tape& tape, const DensityModel& density, ad::Var outputs);
ad::Var loss_l1(ad::Tape& tape, ad::Var outputs, const Batch& data);
ad::Var loss_l2(ad::Tape& tape, ad::Var outputs, const Batch& z, double eps_div);

// Value-only conveniences evaluating B on `z` first.
double loss_l0(const DensityModel& density, const BoundaryModel& boundary, const Batch& z);
double loss_l1(const BoundaryModel& boundary, const Batch& z, const Batch& data);
double loss_l2(const BoundaryModel& boundary, const Batch& z, double eps_div);

struct LossTerms {
  ad::Var total;
  ad::Var l0;
  ad::Var l1;
  ad::Var l2;
};

LossTerms bdsg_loss(ad::Tape& tape, const DensityModel& density, const MlpVars& network, const Batch& z,
                    const Batch& data, const BdsgHyperparams& hp);

/// Breakdown with total recomputed as l0 + lambda1 * l1 + lambda2 * l2.
LossBreakdown bdsg_loss(const DensityModel& density, const BoundaryModel& boundary, const Batch& z,
                        const Batch& data, const BdsgHyperparams& hp);

struct BoundaryTrainResult {
  BoundaryModel model;
  /// Set when a non-finite loss stopped training; `model` is the last good state.
  std::optional<std::string> failure;
};

/// Trains a fresh network with the given widths. Each epoch draws a new
/// N x latent batch from N(0, I), so the run is determined by hp.seed. The
/// density model is only read.
BoundaryTrainResult train_boundary(const DensityModel& density, const Batch& data, const std::vector<int>& widths,
                                   const BdsgHyperparams& hp, Activation activation = Activation::tanh);

/// B applied to n fresh standard-normal latents drawn with `seed`.
Batch sample_boundary(const BoundaryModel& boundary, Eigen::Index n, std::uint64_t seed);

void save_boundary(const std::filesystem::path& path, const BoundaryModel& boundary);
BoundaryModel load_boundary(const std::filesystem::path& path);

}  // namespace bdsg
