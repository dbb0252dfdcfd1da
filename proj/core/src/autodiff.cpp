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

#include <bdsg/autodiff.hpp>
#include <bdsg/error.hpp>

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace bdsg::ad {

namespace {

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) {
    throw ConfigError("operation on a default-constructed Var");
  }
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) {
    throw ConfigError("operands belong to different tapes");
  }
  return tape_of(a);
}

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.value()) + " vs " +
                     shape_string(b.value()));
  }
}

template <typename F>
Matrix map(const Matrix& m, F f) {
  return m.unaryExpr(f);
}

}  // namespace

const Matrix& Var::value() const {
  if (tape_ == nullptr) {
    throw ConfigError("value() on a default-constructed Var");
  }
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("scalar(): node is " + shape_string(v));
  }
  return v(0, 0);
}

bool GradientSink::wants(std::size_t parent) const { return tape_.requires_grad(parents_[parent]); }

void GradientSink::add(std::size_t parent, const Matrix& contribution) const {
  const std::size_t id = parents_[parent];
  if (!tape_.requires_grad(id)) {
    return;
  }
  Matrix& slot = grads_[id];
  if (slot.size() == 0) {
    slot = contribution;
  } else {
    slot += contribution;
  }
}

Matrix Gradients::wrt(Var v) const {
  const std::size_t id = v.id();
  if (id < grads_.size() && grads_[id].size() != 0) {
    return grads_[id];
  }
  return Matrix::Zero(v.rows(), v.cols());
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::scalar_constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::record(Matrix value, const std::vector<Var>& parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.parents.reserve(parents.size());
  for (const Var& p : parents) {
    if (p.tape() != this) {
      throw ConfigError("parent node belongs to a different tape");
    }
    node.parents.push_back(p.id());
    node.requires_grad = node.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (node.requires_grad) {
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::gradient(Var loss, const std::string& term) const {
  if (loss.tape() != this) {
    throw ConfigError("gradient(): loss belongs to a different tape");
  }
  const double value = loss.scalar();
  if (!std::isfinite(value)) {
    throw NumericError(term, "non-finite " + term + " (" + std::to_string(value) + ")");
  }
  Gradients out;
  out.tape_ = this;
  out.grads_.resize(nodes_.size());
  out.grads_[loss.id()] = Matrix::Ones(1, 1);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward || out.grads_[id].size() == 0) {
      continue;
    }
    // Copy: the sink may write into siblings while we hold this gradient.
    const Matrix grad_out = out.grads_[id];
    GradientSink sink(*this, node.parents, out.grads_);
    node.backward(grad_out, sink);
  }
  return out;
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "add");
  return t.record(a.value() + b.value(), {a, b}, [](const Matrix& g, const GradientSink& s) {
    s.add(0, g);
    s.add(1, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "sub");
  return t.record(a.value() - b.value(), {a, b}, [](const Matrix& g, const GradientSink& s) {
    s.add(0, g);
    s.add(1, -g);
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "mul");
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](const Matrix& g, const GradientSink& s) {
    if (s.wants(0)) s.add(0, g.cwiseProduct(b.value()));
    if (s.wants(1)) s.add(1, g.cwiseProduct(a.value()));
  });
}

Var div(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "div");
  Matrix out = a.value().cwiseQuotient(b.value());
  return t.record(std::move(out), {a, b}, [a, b](const Matrix& g, const GradientSink& s) {
    const Matrix& bv = b.value();
    if (s.wants(0)) s.add(0, g.cwiseQuotient(bv));
    if (s.wants(1)) {
      s.add(1, -g.cwiseProduct(a.value()).cwiseQuotient(bv.cwiseProduct(bv)));
    }
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  return t.record(a.value() * factor, {a},
                  [factor](const Matrix& g, const GradientSink& s) { s.add(0, g * factor); });
}

Var add_scalar(Var a, double offset) {
  Tape& t = tape_of(a);
  Matrix out = a.value().array() + offset;
  return t.record(std::move(out), {a}, [](const Matrix& g, const GradientSink& s) { s.add(0, g); });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + shape_string(a.value()) + " * " + shape_string(b.value()));
  }
  return t.record(a.value() * b.value(), {a, b}, [a, b](const Matrix& g, const GradientSink& s) {
    if (s.wants(0)) s.add(0, g * b.value().transpose());
    if (s.wants(1)) s.add(1, a.value().transpose() * g);
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  return t.record(a.value().transpose(), {a},
                  [](const Matrix& g, const GradientSink& s) { s.add(0, g.transpose()); });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " +
                     shape_string(row.value()));
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), {a, row}, [](const Matrix& g, const GradientSink& s) {
    s.add(0, g);
    if (s.wants(1)) s.add(1, g.colwise().sum());
  });
}

Var exp(Var a) {
  Tape& t = tape_of(a);
  // Scalar std::exp keeps subnormal results (e.g. exp(-745)) that the
  // vectorized kernel would flush to its own lower bound.
  Matrix out = a.value().unaryExpr([](double v) { return std::exp(v); });
  auto self = std::make_shared<Matrix>(out);
  return t.record(std::move(out), {a},
                  [self](const Matrix& g, const GradientSink& s) { s.add(0, g.cwiseProduct(*self)); });
}

Var log(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().array().log();
  return t.record(std::move(out), {a},
                  [a](const Matrix& g, const GradientSink& s) { s.add(0, g.cwiseQuotient(a.value())); });
}

Var square(Var a) {
  Tape& t = tape_of(a);
  return t.record(a.value().cwiseAbs2(), {a},
                  [a](const Matrix& g, const GradientSink& s) { s.add(0, 2.0 * g.cwiseProduct(a.value())); });
}

Var tanh(Var a) { return activate(a, Activation::tanh); }

Var activate(Var a, Activation activation) {
  Tape& t = tape_of(a);
  if (activation == Activation::identity) {
    return a;
  }
  Matrix out = map(a.value(), [activation](double x) { return bdsg::activate(activation, x); });
  return t.record(std::move(out), {a}, [a, activation](const Matrix& g, const GradientSink& s) {
    s.add(0, g.cwiseProduct(map(a.value(), [activation](double x) { return activate_derivative(activation, x); })));
  });
}

Var activate_derivative(Var a, Activation activation) {
  Tape& t = tape_of(a);
  Matrix out = map(a.value(), [activation](double x) { return bdsg::activate_derivative(activation, x); });
  return t.record(std::move(out), {a}, [a, activation](const Matrix& g, const GradientSink& s) {
    s.add(0, g.cwiseProduct(
                 map(a.value(), [activation](double x) { return activate_second_derivative(activation, x); })));
  });
}

Var clamp_min(Var a, double floor) {
  Tape& t = tape_of(a);
  Matrix out = a.value().cwiseMax(floor);
  return t.record(std::move(out), {a}, [a, floor](const Matrix& g, const GradientSink& s) {
    Matrix masked = g;
    const Matrix& v = a.value();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v.data()[i] < floor) masked.data()[i] = 0.0;
    }
    s.add(0, masked);
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return t.record(Matrix::Constant(1, 1, a.value().sum()), {a}, [r, c](const Matrix& g, const GradientSink& s) {
    s.add(0, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) {
    throw ShapeError("mean of an empty node");
  }
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  Tape& t = tape_of(a);
  const Eigen::Index c = a.cols();
  return t.record(a.value().rowwise().sum(), {a}, [c](const Matrix& g, const GradientSink& s) {
    s.add(0, g.col(0).replicate(1, c));
  });
}

Var row_norm(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().rowwise().norm();
  auto norms = std::make_shared<Matrix>(out);
  return t.record(std::move(out), {a}, [a, norms](const Matrix& g, const GradientSink& s) {
    const Matrix& v = a.value();
    Matrix d = Matrix::Zero(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double n = (*norms)(i, 0);
      if (n > 0.0) d.row(i) = v.row(i) * (g(i, 0) / n);
    }
    s.add(0, d);
  });
}

Var logsumexp_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& v = a.value();
  Matrix out(v.rows(), 1);
  auto weights = std::make_shared<Matrix>(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double m = v.row(i).maxCoeff();
    if (!std::isfinite(m)) {
      out(i, 0) = m;
      weights->row(i).setZero();
      continue;
    }
    const auto e = (v.row(i).array() - m).exp();
    const double total = e.sum();
    out(i, 0) = m + std::log(total);
    weights->row(i) = e / total;
  }
  return t.record(std::move(out), {a}, [weights](const Matrix& g, const GradientSink& s) {
    s.add(0, weights->array().colwise() * g.col(0).array());
  });
}

Var hstack(const std::vector<Var>& parts) {
  if (parts.empty()) {
    throw ShapeError("hstack of nothing");
  }
  Tape& t = tape_of(parts.front());
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    if (p.rows() != rows) throw ShapeError("hstack: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    offsets.push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) widths.push_back(p.cols());
  return t.record(std::move(out), parts, [offsets, widths](const Matrix& g, const GradientSink& s) {
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (s.wants(k)) s.add(k, g.middleCols(offsets[k], widths[k]));
    }
  });
}

Var column(Var a, Eigen::Index index) {
  Tape& t = tape_of(a);
  if (index < 0 || index >= a.cols()) {
    throw ShapeError("column index out of range");
  }
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return t.record(a.value().col(index), {a}, [r, c, index](const Matrix& g, const GradientSink& s) {
    Matrix d = Matrix::Zero(r, c);
    d.col(index) = g.col(0);
    s.add(0, d);
  });
}

Var pairwise_distances(Var a) {
  Tape& t = tape_of(a);
  const Matrix& v = a.value();
  const Eigen::Index n = v.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (v.row(i) - v.row(j)).norm();
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  auto dist = std::make_shared<Matrix>(out);
  return t.record(std::move(out), {a}, [a, dist](const Matrix& g, const GradientSink& s) {
    const Matrix& v = a.value();
    const Eigen::Index n = v.rows();
    Matrix d = Matrix::Zero(n, v.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double r = (*dist)(i, j);
        if (r <= 0.0) continue;
        const double w = (g(i, j) + g(j, i)) / r;
        const auto diff = (v.row(i) - v.row(j)) * w;
        d.row(i) += diff;
        d.row(j) -= diff;
      }
    }
    s.add(0, d);
  });
}

Var row_logabsdet(const std::vector<Var>& columns) {
  if (columns.empty()) {
    throw ShapeError("row_logabsdet needs at least one column");
  }
  Tape& t = tape_of(columns.front());
  const auto d = static_cast<Eigen::Index>(columns.size());
  const Eigen::Index n = columns.front().rows();
  for (const Var& c : columns) {
    tape_of(columns.front(), c);
    if (c.rows() != n || c.cols() != d) {
      throw ShapeError("row_logabsdet: every column node must be n x d with d = number of columns");
    }
  }
  Matrix out(n, 1);
  // Row i of inv_t[k] is column k of M_i^{-T}.
  auto inv_t = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(d), Matrix(n, d));
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      m.col(k) = columns[static_cast<std::size_t>(k)].value().row(i).transpose();
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    double logdet = 0.0;
    const Eigen::MatrixXd& packed = lu.matrixLU();
    for (Eigen::Index k = 0; k < d; ++k) logdet += std::log(std::abs(packed(k, k)));
    out(i, 0) = logdet;
    const Eigen::MatrixXd mit = lu.inverse().transpose();
    for (Eigen::Index k = 0; k < d; ++k) {
      (*inv_t)[static_cast<std::size_t>(k)].row(i) = mit.col(k).transpose();
    }
  }
  return t.record(std::move(out), columns, [inv_t](const Matrix& g, const GradientSink& s) {
    for (std::size_t k = 0; k < inv_t->size(); ++k) {
      if (s.wants(k)) s.add(k, (*inv_t)[k].array().colwise() * g.col(0).array());
    }
  });
}

Var row_linear_map(std::vector<Eigen::MatrixXd> maps, Var rhs) {
  Tape& t = tape_of(rhs);
  const Eigen::Index n = rhs.rows();
  if (static_cast<Eigen::Index>(maps.size()) != n) {
    throw ShapeError("row_linear_map: one map per row required");
  }
  const Eigen::Index d = rhs.cols();
  for (const auto& m : maps) {
    if (m.cols() != d) throw ShapeError("row_linear_map: map column count must equal rhs width");
  }
  const Eigen::Index out_cols = n > 0 ? maps.front().rows() : d;
  Matrix out(n, out_cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = (maps[static_cast<std::size_t>(i)] * rhs.value().row(i).transpose()).transpose();
  }
  auto shared = std::make_shared<std::vector<Eigen::MatrixXd>>(std::move(maps));
  return t.record(std::move(out), {rhs}, [shared, d](const Matrix& g, const GradientSink& s) {
    Matrix back(g.rows(), d);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      back.row(i) = ((*shared)[static_cast<std::size_t>(i)].transpose() * g.row(i).transpose()).transpose();
    }
    s.add(0, back);
  });
}

}  // namespace bdsg::ad
