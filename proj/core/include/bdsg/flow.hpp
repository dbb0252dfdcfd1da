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

// Invertible residual flow x = G(z), z ~ N(0, I).
//
// Each block maps u -> u + f(u) where f is an Mlp whose layers are spectrally
// normalized, so Lip(f) < 1 and the block is invertible by the fixed-point
// iteration u <- y - f(u). Log-determinants are exact: the d columns of J_f
// come from forward-mode tangent passes, which is affordable for the small
// dimensions this library targets.

#include <bdsg/density.hpp>
#include <bdsg/mlp.hpp>
#include <bdsg/optimizer.hpp>
#include <bdsg/random.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bdsg {

struct ResidualBlock {
  Mlp net;
  double lipschitz_bound = 0.9;
};

struct InverseOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

struct FlowOptions {
  int dim = 2;
  int blocks = 8;
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::elu;
  /// Per-layer spectral-norm target.
  double lipschitz = 0.9;
  std::uint64_t seed = 0;
};

/// Solves u = y - f(u) row by row from u0 = y. Throws InversionError (with
/// the row index) if some row has not converged after max_iter steps.
Batch invert_block(const Mlp& net, const Batch& y, const InverseOptions& options);

/// Single-point variant. When `residuals` is given it receives the distance
/// between successive iterates.
Point invert_block(const Mlp& net, const Point& y, const InverseOptions& options,
                   std::vector<double>* residuals = nullptr);

/// log|det(I + J_f(u_i))| for every row of u.
Vector block_log_det(const Mlp& net, const Batch& u);

class FlowModel final : public DensityModel {
 public:
  FlowModel() = default;
  FlowModel(int dim, std::vector<ResidualBlock> blocks, InverseOptions inverse = {});

  /// Random sub-networks of widths [dim, hidden..., dim], spectrally
  /// normalized to `lipschitz` per layer with 50 power iterations.
  static FlowModel build(const FlowOptions& options);

  int dim() const override { return dim_; }
  std::string kind() const override { return "flow"; }

  const std::vector<ResidualBlock>& blocks() const noexcept { return blocks_; }
  std::vector<ResidualBlock>& blocks() noexcept { return blocks_; }
  const InverseOptions& inverse_options() const noexcept { return inverse_; }
  void set_inverse_options(const InverseOptions& options) { inverse_ = options; }

  struct Forward {
    Batch x;
    Vector log_det;
  };
  Forward forward(const Batch& z) const;

  struct PointForward {
    Point x;
    double log_det = 0.0;
  };
  PointForward forward(const Point& z) const;

  Batch inverse(const Batch& x) const;
  Point inverse(const Point& x) const;
  Point inverse(const Point& x, double tol, int max_iter) const;

  using DensityModel::log_density;
  Vector log_density(const Batch& x) const override;
  ad::Var log_density(ad::Tape& tape, ad::Var x) const override;

  /// G(z) for n fresh standard-normal draws.
  Batch sample(Eigen::Index n, Rng& rng) const;

  friend bool operator==(const FlowModel&, const FlowModel&);

 private:
  int dim_ = 0;
  std::vector<ResidualBlock> blocks_;
  InverseOptions inverse_;
};

/// Change-of-variables log-density built on `tape`. `vars[b]` holds the
/// parameters of block b (variables when training, constants otherwise).
/// Gradients through the fixed-point inverse use the implicit function
/// theorem: du/dy = (I + J_f(u))^{-1}, du/dtheta = -(I + J_f(u))^{-1} df/dtheta.
ad::Var flow_log_density(ad::Tape& tape, const FlowModel& flow, ad::Var x, const std::vector<MlpVars>& vars);

struct FlowTrainOptions {
  int epochs = 100;
  int batch_size = 256;
  AdamOptions adam{};
  /// Cosine-anneal the learning rate from adam.learning_rate down to this
  /// fraction of it over the run. 1 keeps it constant.
  double final_lr_fraction = 1.0;
  int power_iters_per_step = 1;
  int power_iters_final = 50;
  std::uint64_t seed = 0;
};

struct FlowTrainResult {
  FlowModel flow;
  /// Mean negative log-likelihood per epoch.
  std::vector<double> history;
  /// Set when training stopped early; `flow` is then the last good model.
  std::optional<std::string> failure;
};

/// Minimizes -(1/N) sum log p(x_i) over shuffled minibatches, re-applying
/// spectral normalization after each optimizer step.
FlowTrainResult train_flow(FlowModel flow, const Batch& data, const FlowTrainOptions& options);

void write_flow(std::ostream& out, const FlowModel& flow);
FlowModel read_flow(std::istream& in);
void save_flow(const std::filesystem::path& path, const FlowModel& flow);
FlowModel load_flow(const std::filesystem::path& path);

}  // namespace bdsg
