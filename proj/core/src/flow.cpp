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

#include <bdsg/checkpoint.hpp>
#include <bdsg/error.hpp>
#include <bdsg/flow.hpp>
#include <bdsg/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace bdsg {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Matrix unit_tangent(Eigen::Index n, Eigen::Index d, Eigen::Index k) {
  Matrix e = Matrix::Zero(n, d);
  e.col(k).setOnes();
  return e;
}

/// Row i of result[k] is column k of I + J_f(u_i).
std::vector<Batch> jacobian_columns(const Mlp& net, const Batch& u) {
  const Eigen::Index n = u.rows();
  const Eigen::Index d = u.cols();
  std::vector<Batch> cols;
  cols.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    Batch c = net.jvp(u, unit_tangent(n, d, k));
    c.col(k).array() += 1.0;
    cols.push_back(std::move(c));
  }
  return cols;
}

Eigen::MatrixXd row_matrix(const std::vector<Batch>& cols, Eigen::Index i) {
  const auto d = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index k = 0; k < d; ++k) m.col(k) = cols[static_cast<std::size_t>(k)].row(i).transpose();
  return m;
}

void check_block(const Mlp& net, int dim) {
  if (net.input_dim() != dim || net.output_dim() != dim) {
    throw ConfigError("residual sub-network must map R^" + std::to_string(dim) + " to itself");
  }
}

}  // namespace

Batch invert_block(const Mlp& net, const Batch& y, const InverseOptions& options) {
  if (options.max_iter < 1 || !(options.tol > 0.0)) {
    throw ConfigError("inversion needs tol > 0 and max_iter >= 1");
  }
  const Eigen::Index n = y.rows();
  Batch u = y;
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  std::vector<double> last(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index remaining = n;
  for (int it = 0; it < options.max_iter && remaining > 0; ++it) {
    const Batch next = y - net.forward(u);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      if (done[iu]) continue;
      const double step = (next.row(i) - u.row(i)).norm();
      u.row(i) = next.row(i);
      last[iu] = step;
      if (step < options.tol) {
        done[iu] = 1;
        --remaining;
      }
    }
  }
  if (remaining > 0) {
    const auto it = std::find(done.begin(), done.end(), 0);
    const auto row = static_cast<std::size_t>(it - done.begin());
    throw InversionError(last[row], row,
                         "fixed-point inversion did not converge for row " + std::to_string(row) +
                             " (last step " + std::to_string(last[row]) + ")");
  }
  return u;
}

Point invert_block(const Mlp& net, const Point& y, const InverseOptions& options, std::vector<double>* residuals) {
  if (options.max_iter < 1 || !(options.tol > 0.0)) {
    throw ConfigError("inversion needs tol > 0 and max_iter >= 1");
  }
  Point u = y;
  double step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iter; ++it) {
    Point next = y - net.forward(u);
    step = (next - u).norm();
    u = std::move(next);
    if (residuals != nullptr) residuals->push_back(step);
    if (step < options.tol) return u;
  }
  throw InversionError(step, std::nullopt,
                       "fixed-point inversion did not converge (last step " + std::to_string(step) + ")");
}

Vector block_log_det(const Mlp& net, const Batch& u) {
  const auto cols = jacobian_columns(net, u);
  Vector out(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const Eigen::MatrixXd m = row_matrix(cols, i);
    if (m.rows() == 2) {
      out(i) = std::log(std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)));
    } else {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
      double s = 0.0;
      for (Eigen::Index k = 0; k < m.rows(); ++k) s += std::log(std::abs(lu.matrixLU()(k, k)));
      out(i) = s;
    }
  }
  return out;
}

FlowModel::FlowModel(int dim, std::vector<ResidualBlock> blocks, InverseOptions inverse)
    : dim_(dim), blocks_(std::move(blocks)), inverse_(inverse) {
  if (dim_ < 1) {
    throw ConfigError("flow dimension must be positive");
  }
  for (const auto& b : blocks_) {
    check_block(b.net, dim_);
    if (!(b.lipschitz_bound > 0.0 && b.lipschitz_bound < 1.0)) {
      throw ConfigError("block Lipschitz bound must lie in (0, 1)");
    }
  }
}

FlowModel FlowModel::build(const FlowOptions& options) {
  if (options.dim < 1 || options.blocks < 0) {
    throw ConfigError("flow needs dim >= 1 and blocks >= 0");
  }
  std::vector<int> widths;
  widths.push_back(options.dim);
  widths.insert(widths.end(), options.hidden.begin(), options.hidden.end());
  widths.push_back(options.dim);
  std::vector<ResidualBlock> blocks;
  for (int b = 0; b < options.blocks; ++b) {
    const std::uint64_t seed = derive_seed(options.seed, "flow-block-" + std::to_string(b));
    Mlp net = Mlp::build(widths, options.activation, seed);
    for (auto& layer : net.layers()) {
      layer.weight = spectral_normalize(layer.weight, options.lipschitz, 50, seed).weight;
    }
    blocks.push_back({std::move(net), options.lipschitz});
  }
  return FlowModel(options.dim, std::move(blocks));
}

FlowModel::Forward FlowModel::forward(const Batch& z) const {
  if (z.cols() != dim_) {
    throw ShapeError("flow forward: expected " + std::to_string(dim_) + " columns");
  }
  Forward out{z, Vector::Zero(z.rows())};
  for (const auto& b : blocks_) {
    out.log_det += block_log_det(b.net, out.x);
    out.x += b.net.forward(out.x);
  }
  return out;
}

FlowModel::PointForward FlowModel::forward(const Point& z) const {
  const Forward f = forward(Batch(z.transpose()));
  return {f.x.row(0).transpose(), f.log_det(0)};
}

Batch FlowModel::inverse(const Batch& x) const {
  if (x.cols() != dim_) {
    throw ShapeError("flow inverse: expected " + std::to_string(dim_) + " columns");
  }
  Batch y = x;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    y = invert_block(it->net, y, inverse_);
  }
  return y;
}

Point FlowModel::inverse(const Point& x) const { return inverse(x, inverse_.tol, inverse_.max_iter); }

Point FlowModel::inverse(const Point& x, double tol, int max_iter) const {
  if (x.size() != dim_) {
    throw ShapeError("flow inverse: expected dimension " + std::to_string(dim_));
  }
  Point y = x;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    y = invert_block(it->net, y, InverseOptions{tol, max_iter});
  }
  return y;
}

Vector FlowModel::log_density(const Batch& x) const {
  if (x.cols() != dim_) {
    throw ShapeError("flow log_density: expected " + std::to_string(dim_) + " columns");
  }
  Batch y = x;
  Vector total = Vector::Zero(x.rows());
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    y = invert_block(it->net, y, inverse_);
    total += block_log_det(it->net, y);
  }
  Vector base = (-0.5 * y.rowwise().squaredNorm()).array() - 0.5 * dim_ * kLog2Pi;
  return base - total;
}

ad::Var FlowModel::log_density(ad::Tape& tape, ad::Var x) const {
  std::vector<MlpVars> vars;
  vars.reserve(blocks_.size());
  for (const auto& b : blocks_) vars.push_back(bind(tape, b.net, false));
  return flow_log_density(tape, *this, x, vars);
}

Batch FlowModel::sample(Eigen::Index n, Rng& rng) const { return forward(standard_normal(n, dim_, rng)).x; }

bool operator==(const FlowModel& a, const FlowModel& b) {
  if (a.dim_ != b.dim_ || a.blocks_.size() != b.blocks_.size()) return false;
  if (a.inverse_.tol != b.inverse_.tol || a.inverse_.max_iter != b.inverse_.max_iter) return false;
  for (std::size_t k = 0; k < a.blocks_.size(); ++k) {
    if (!(a.blocks_[k].net == b.blocks_[k].net) || a.blocks_[k].lipschitz_bound != b.blocks_[k].lipschitz_bound) {
      return false;
    }
  }
  return true;
}

ad::Var flow_log_density(ad::Tape& tape, const FlowModel& flow, ad::Var x, const std::vector<MlpVars>& vars) {
  const Eigen::Index d = flow.dim();
  if (x.cols() != d) {
    throw ShapeError("flow log_density: expected " + std::to_string(d) + " columns");
  }
  if (vars.size() != flow.blocks().size()) {
    throw ConfigError("flow_log_density: one parameter set per block required");
  }
  const Eigen::Index n = x.rows();
  std::vector<ad::Var> units;
  for (Eigen::Index k = 0; k < d; ++k) units.push_back(tape.constant(unit_tangent(n, d, k)));

  ad::Var y = x;
  std::optional<ad::Var> log_det;
  for (std::size_t b = flow.blocks().size(); b-- > 0;) {
    const Mlp& net = flow.blocks()[b].net;
    const Batch u_star = invert_block(net, y.value(), flow.inverse_options());
    const auto cols = jacobian_columns(net, u_star);
    std::vector<Eigen::MatrixXd> inverses;
    inverses.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) inverses.push_back(row_matrix(cols, i).inverse());

    // Value equals u_star; first derivatives follow the implicit function theorem.
    ad::Var u_const = tape.constant(u_star);
    ad::Var residual = ad::sub(ad::sub(y, u_const), forward(vars[b], u_const));
    ad::Var u = ad::add(u_const, ad::row_linear_map(std::move(inverses), residual));

    const TangentForward tf = forward_with_tangents(vars[b], u, units);
    std::vector<ad::Var> jac;
    for (Eigen::Index k = 0; k < d; ++k) jac.push_back(ad::add(tf.tangents[static_cast<std::size_t>(k)], units[static_cast<std::size_t>(k)]));
    ad::Var ld = ad::row_logabsdet(jac);
    log_det = log_det ? ad::add(*log_det, ld) : ld;
    y = u;
  }
  ad::Var base = ad::add_scalar(ad::scale(ad::row_sum(ad::square(y)), -0.5), -0.5 * static_cast<double>(d) * kLog2Pi);
  return log_det ? ad::sub(base, *log_det) : base;
}

FlowTrainResult train_flow(FlowModel flow, const Batch& data, const FlowTrainOptions& options) {
  if (data.cols() != flow.dim()) {
    throw ShapeError("training data has " + std::to_string(data.cols()) + " columns, flow expects " +
                     std::to_string(flow.dim()));
  }
  if (options.epochs < 0) {
    throw ConfigError("epochs must be non-negative");
  }
  if (options.batch_size < 1 || options.batch_size > data.rows()) {
    throw ConfigError("flow training needs 1 <= batch_size <= M");
  }
  if (!(options.final_lr_fraction > 0.0 && options.final_lr_fraction <= 1.0)) {
    throw ConfigError("final_lr_fraction must lie in (0, 1]");
  }
  FlowTrainResult result{flow, {}, std::nullopt};
  if (options.epochs == 0 || flow.blocks().empty()) {
    return result;
  }

  Rng rng(options.seed);
  std::vector<SpectralNormalizer> normalizers;
  for (std::size_t b = 0; b < flow.blocks().size(); ++b) {
    normalizers.emplace_back(flow.blocks()[b].net, flow.blocks()[b].lipschitz_bound,
                             derive_seed(options.seed, "spectral-" + std::to_string(b)));
  }
  OptimizerState state;
  state.options = options.adam;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  const double lr0 = options.adam.learning_rate;
  const double lr_end = lr0 * options.final_lr_fraction;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double progress = options.epochs > 1 ? static_cast<double>(epoch) / (options.epochs - 1) : 0.0;
    state.options.learning_rate = lr_end + 0.5 * (lr0 - lr_end) * (1.0 + std::cos(std::numbers::pi * progress));
    const FlowModel last_good = flow;
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
        Batch batch(static_cast<Eigen::Index>(stop - start), data.cols());
        for (std::size_t i = start; i < stop; ++i) batch.row(static_cast<Eigen::Index>(i - start)) = data.row(order[i]);

        ad::Tape tape;
        std::vector<MlpVars> vars;
        for (const auto& b : flow.blocks()) vars.push_back(bind(tape, b.net, true));
        ad::Var nll = ad::neg(ad::mean(flow_log_density(tape, flow, tape.constant(batch), vars)));
        const ad::Gradients grads = tape.gradient(nll, "negative log-likelihood");

        std::vector<Matrix*> params;
        std::vector<Matrix> g;
        for (std::size_t b = 0; b < flow.blocks().size(); ++b) {
          for (Matrix* p : flow.blocks()[b].net.parameters()) params.push_back(p);
          for (Matrix& gm : collect_gradients(grads, vars[b])) g.push_back(std::move(gm));
        }
        adam_step(params, g, state);
        for (std::size_t b = 0; b < flow.blocks().size(); ++b) {
          normalizers[b].apply(flow.blocks()[b].net, options.power_iters_per_step);
        }
        epoch_sum += nll.scalar() * static_cast<double>(stop - start);
      }
    } catch (const NumericError& e) {
      result.flow = last_good;
      result.failure = "epoch " + std::to_string(epoch) + ": " + e.what();
      return result;
    } catch (const InversionError& e) {
      result.flow = last_good;
      result.failure = "epoch " + std::to_string(epoch) + ": " + e.what();
      return result;
    }
    result.history.push_back(epoch_sum / static_cast<double>(data.rows()));
  }
  for (std::size_t b = 0; b < flow.blocks().size(); ++b) {
    normalizers[b].apply(flow.blocks()[b].net, options.power_iters_final);
  }
  result.flow = std::move(flow);
  return result;
}

void write_flow(std::ostream& out, const FlowModel& flow) {
  out << "bdsg-flow " << checkpoint::kFormatVersion << '\n';
  out << "dim " << flow.dim() << '\n';
  out << "inverse " << checkpoint::format_double(flow.inverse_options().tol) << ' '
      << flow.inverse_options().max_iter << '\n';
  out << "blocks " << flow.blocks().size() << '\n';
  for (std::size_t b = 0; b < flow.blocks().size(); ++b) {
    out << "block " << b << " lipschitz " << checkpoint::format_double(flow.blocks()[b].lipschitz_bound) << '\n';
    checkpoint::write_mlp(out, flow.blocks()[b].net);
  }
  out << "end-flow\n";
}

FlowModel read_flow(std::istream& in) {
  checkpoint::Reader reader(in);
  const auto header = reader.expect("bdsg-flow", 2);
  if (header[1] != std::to_string(checkpoint::kFormatVersion)) {
    throw ParseError(reader.line(), "unsupported flow checkpoint version " + header[1]);
  }
  const int dim = std::stoi(reader.expect("dim", 2)[1]);
  const auto inv = reader.expect("inverse", 3);
  InverseOptions inverse{checkpoint::parse_double(inv[1], reader.line()), std::stoi(inv[2])};
  const int count = std::stoi(reader.expect("blocks", 2)[1]);
  std::vector<ResidualBlock> blocks;
  for (int b = 0; b < count; ++b) {
    const auto tokens = reader.expect("block", 4);
    if (tokens[2] != "lipschitz") {
      throw ParseError(reader.line(), "malformed block header");
    }
    const double bound = checkpoint::parse_double(tokens[3], reader.line());
    blocks.push_back({checkpoint::read_mlp(in), bound});
  }
  reader.expect("end-flow");
  return FlowModel(dim, std::move(blocks), inverse);
}

void save_flow(const std::filesystem::path& path, const FlowModel& flow) {
  std::ostringstream out;
  write_flow(out, flow);
  checkpoint::write_text_file(path, out.str());
}

FlowModel load_flow(const std::filesystem::path& path) {
  std::istringstream in(checkpoint::read_text_file(path));
  try {
    return read_flow(in);
  } catch (const std::invalid_argument&) {
    throw ParseError(0, "malformed integer in flow checkpoint '" + path.string() + "'");
  } catch (const std::out_of_range&) {
    throw ParseError(0, "integer out of range in flow checkpoint '" + path.string() + "'");
  }
}

}  // namespace bdsg
