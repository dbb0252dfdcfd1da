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
#include <bdsg/mlp.hpp>

#include <cmath>
#include <random>
#include <string>

namespace bdsg {

namespace {

void validate_widths(const std::vector<int>& widths) {
  if (widths.size() < 2) {
    throw ConfigError("layer width list needs at least two entries");
  }
  for (int w : widths) {
    if (w < 1) {
      throw ConfigError("layer widths must be positive, got " + std::to_string(w));
    }
  }
}

Matrix apply_activation(const Matrix& m, Activation a) {
  return m.unaryExpr([a](double x) { return activate(a, x); });
}

Matrix apply_derivative(const Matrix& m, Activation a) {
  return m.unaryExpr([a](double x) { return activate_derivative(a, x); });
}

}  // namespace

Mlp::Mlp(std::vector<int> widths, Activation activation, std::vector<DenseLayer> layers, std::uint64_t seed)
    : widths_(std::move(widths)), activation_(activation), layers_(std::move(layers)), seed_(seed) {
  validate_widths(widths_);
  if (layers_.size() != widths_.size() - 1) {
    throw ConfigError("layer count does not match width list");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weight.rows() != widths_[l + 1] || layer.weight.cols() != widths_[l]) {
      throw ShapeError("weight " + std::to_string(l) + " has shape " + std::to_string(layer.weight.rows()) + "x" +
                       std::to_string(layer.weight.cols()) + ", expected " + std::to_string(widths_[l + 1]) + "x" +
                       std::to_string(widths_[l]));
    }
    if (layer.bias.rows() != 1 || layer.bias.cols() != widths_[l + 1]) {
      throw ShapeError("bias " + std::to_string(l) + " must be 1x" + std::to_string(widths_[l + 1]));
    }
  }
}

Mlp Mlp::build(std::vector<int> widths, Activation activation, std::uint64_t seed) {
  validate_widths(widths);
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  layers.reserve(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    DenseLayer layer;
    layer.weight.resize(widths[l + 1], fan_in);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = dist(rng);
    }
    layer.bias = Matrix::Zero(1, widths[l + 1]);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(widths), activation, std::move(layers), seed);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return n;
}

std::vector<Matrix*> Mlp::parameters() {
  std::vector<Matrix*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Matrix*> Mlp::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

void Mlp::check_input(Eigen::Index cols) const {
  if (widths_.empty()) {
    throw ConfigError("forward on an empty model");
  }
  if (cols != widths_.front()) {
    throw ShapeError("input has " + std::to_string(cols) + " columns, model expects " +
                     std::to_string(widths_.front()));
  }
}

Batch Mlp::forward(const Batch& input) const {
  check_input(input.cols());
  Matrix h = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix pre = (h * layers_[l].weight.transpose()).rowwise() + layers_[l].bias.row(0);
    h = (l + 1 < layers_.size()) ? apply_activation(pre, activation_) : std::move(pre);
  }
  return h;
}

Point Mlp::forward(const Point& x) const {
  const Batch out = forward(Batch(x.transpose()));
  return out.row(0).transpose();
}

Batch Mlp::jvp(const Batch& x, const Batch& v) const {
  check_input(x.cols());
  if (v.rows() != x.rows() || v.cols() != x.cols()) {
    throw ShapeError("jvp: tangent shape does not match input shape");
  }
  Matrix h = x;
  Matrix t = v;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Matrix wt = layers_[l].weight.transpose();
    Matrix pre = (h * wt).rowwise() + layers_[l].bias.row(0);
    Matrix tpre = t * wt;
    if (l + 1 < layers_.size()) {
      t = tpre.cwiseProduct(apply_derivative(pre, activation_));
      h = apply_activation(pre, activation_);
    } else {
      t = std::move(tpre);
      h = std::move(pre);
    }
  }
  return t;
}

Point Mlp::jvp(const Point& x, const Point& v) const {
  const Batch out = jvp(Batch(x.transpose()), Batch(v.transpose()));
  return out.row(0).transpose();
}

Eigen::MatrixXd Mlp::jacobian(const Point& x) const {
  check_input(x.size());
  const Eigen::Index d_in = x.size();
  Batch xs = x.transpose().replicate(d_in, 1);
  Batch vs = Batch::Identity(d_in, d_in);
  const Batch cols = jvp(xs, vs);  // row k = J e_k
  return cols.transpose();
}

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.widths_ != b.widths_ || a.activation_ != b.activation_ || a.seed_ != b.seed_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

MlpVars bind(ad::Tape& tape, const Mlp& model, bool trainable) {
  MlpVars vars;
  vars.activation = model.activation();
  for (const auto& layer : model.layers()) {
    vars.weights.push_back(trainable ? tape.variable(layer.weight) : tape.constant(layer.weight));
    vars.biases.push_back(trainable ? tape.variable(layer.bias) : tape.constant(layer.bias));
  }
  return vars;
}

std::vector<Matrix> collect_gradients(const ad::Gradients& grads, const MlpVars& vars) {
  std::vector<Matrix> out;
  out.reserve(vars.weights.size() * 2);
  for (std::size_t l = 0; l < vars.weights.size(); ++l) {
    out.push_back(grads.wrt(vars.weights[l]));
    out.push_back(grads.wrt(vars.biases[l]));
  }
  return out;
}

ad::Var forward(const MlpVars& vars, ad::Var input) {
  ad::Var h = input;
  const std::size_t n = vars.weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    ad::Var pre = ad::add_row(ad::matmul(h, ad::transpose(vars.weights[l])), vars.biases[l]);
    h = (l + 1 < n) ? ad::activate(pre, vars.activation) : pre;
  }
  return h;
}

TangentForward forward_with_tangents(const MlpVars& vars, ad::Var input, const std::vector<ad::Var>& tangents) {
  ad::Var h = input;
  std::vector<ad::Var> ts = tangents;
  const std::size_t n = vars.weights.size();
  for (std::size_t l = 0; l < n; ++l) {
    ad::Var wt = ad::transpose(vars.weights[l]);
    ad::Var pre = ad::add_row(ad::matmul(h, wt), vars.biases[l]);
    if (l + 1 < n) {
      ad::Var slope = ad::activate_derivative(pre, vars.activation);
      for (auto& t : ts) t = ad::mul(ad::matmul(t, wt), slope);
      h = ad::activate(pre, vars.activation);
    } else {
      for (auto& t : ts) t = ad::matmul(t, wt);
      h = pre;
    }
  }
  return {h, ts};
}

}  // namespace bdsg
