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
#include <bdsg/types.hpp>

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace bdsg::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Accumulates gradient contributions into the parents of the node being
/// back-propagated. Contributions to parents that do not require a gradient
/// are dropped.
class GradientSink {
 public:
  bool wants(std::size_t parent) const;
  void add(std::size_t parent, const Matrix& contribution) const;

 private:
  friend class Tape;
  GradientSink(const Tape& tape, const std::vector<std::size_t>& parents, std::vector<Matrix>& grads)
      : tape_(tape), parents_(parents), grads_(grads) {}

  const Tape& tape_;
  const std::vector<std::size_t>& parents_;
  std::vector<Matrix>& grads_;
};

using BackwardFn = std::function<void(const Matrix& grad_out, const GradientSink& sink)>;

class Gradients {
 public:
  /// d(loss)/d(v), same shape as v. Zero when v does not influence the loss.
  Matrix wrt(Var v) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<Matrix> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf node whose gradient is tracked.
  Var variable(Matrix value);
  /// Leaf node treated as a constant.
  Var constant(Matrix value);
  Var scalar_constant(double value);

  /// Appends an operation node. `backward` receives d(loss)/d(node) and
  /// pushes contributions for `parents`, indexed in the given order.
  Var record(Matrix value, const std::vector<Var>& parents, BackwardFn backward);

  /// Reverse sweep from a 1x1 node. Throws NumericError naming `term` when
  /// the loss value is not finite.
  Gradients gradient(Var loss, const std::string& term = "loss") const;

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

// Element-wise arithmetic. Shapes must match exactly; no broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }

Var matmul(Var a, Var b);
Var transpose(Var a);
/// Adds a 1 x c row to every row of an n x c matrix.
Var add_row(Var a, Var row);

Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var tanh(Var a);
Var activate(Var a, Activation activation);
/// Element-wise first derivative of the activation, itself differentiable.
Var activate_derivative(Var a, Activation activation);
/// max(a, floor) element-wise; gradient is zero where the floor is active.
Var clamp_min(Var a, double floor);

Var sum(Var a);
Var mean(Var a);
/// n x c -> n x 1.
Var row_sum(Var a);
/// Euclidean norm of each row, n x c -> n x 1. Subgradient zero at the origin.
Var row_norm(Var a);
/// Numerically stable log(sum(exp(row))), n x c -> n x 1.
Var logsumexp_rows(Var a);
Var hstack(const std::vector<Var>& parts);
/// Column `index` of a, as n x 1.
Var column(Var a, Eigen::Index index);

/// n x d -> n x n matrix of Euclidean distances between rows.
Var pairwise_distances(Var a);
/// For each row i, builds the d x d matrix whose column k is row i of
/// columns[k] and returns log|det| of it, n x 1.
Var row_logabsdet(const std::vector<Var>& columns);
/// Row i of the result is maps[i] * (row i of rhs)^T. The maps are constants.
Var row_linear_map(std::vector<Eigen::MatrixXd> maps, Var rhs);

}  // namespace bdsg::ad
