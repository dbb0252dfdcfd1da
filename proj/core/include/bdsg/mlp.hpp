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

#include <bdsg/activation.hpp>
#include <bdsg/autodiff.hpp>
#include <bdsg/types.hpp>

#include <cstdint>
#include <vector>

namespace bdsg {

struct DenseLayer {
  Matrix weight;  // out x in
  Matrix bias;    // 1 x out
};

/// Fully-connected network. `activation` is applied after every layer except
/// the last, which is linear.
class Mlp {
 public:
  Mlp() = default;
  /// Wraps explicit layers; validates that they chain with `widths`.
  Mlp(std::vector<int> widths, Activation activation, std::vector<DenseLayer> layers, std::uint64_t seed = 0);

  /// Weights ~ N(0, 1/fan_in), zero biases. Same arguments give the same bytes.
  static Mlp build(std::vector<int> widths, Activation activation, std::uint64_t seed);

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  Activation activation() const noexcept { return activation_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  std::size_t parameter_count() const;
  /// Weight and bias of every layer, in order w0, b0, w1, b1, ...
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  Batch forward(const Batch& input) const;
  Point forward(const Point& x) const;

  /// Row i of the result is J(x_i) v_i, computed in forward mode.
  Batch jvp(const Batch& x, const Batch& v) const;
  Point jvp(const Point& x, const Point& v) const;
  Eigen::MatrixXd jacobian(const Point& x) const;

  friend bool operator==(const Mlp&, const Mlp&);

 private:
  void check_input(Eigen::Index cols) const;

  std::vector<int> widths_;
  Activation activation_ = Activation::tanh;
  std::vector<DenseLayer> layers_;
  std::uint64_t seed_ = 0;
};

/// An Mlp's parameters placed on a tape, either as tracked variables or as
/// constants.
struct MlpVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  Activation activation = Activation::tanh;
};

MlpVars bind(ad::Tape& tape, const Mlp& model, bool trainable);

/// Flattens d(loss)/d(params) in the order of Mlp::parameters().
std::vector<Matrix> collect_gradients(const ad::Gradients& grads, const MlpVars& vars);

ad::Var forward(const MlpVars& vars, ad::Var input);

struct TangentForward {
  ad::Var output;
  std::vector<ad::Var> tangents;
};

/// Forward pass that also pushes each input tangent through the network.
/// Everything stays on the tape, so the tangents are differentiable.
TangentForward forward_with_tangents(const MlpVars& vars, ad::Var input, const std::vector<ad::Var>& tangents);

}  // namespace bdsg
