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

#include <bdsg/boundary.hpp>
#include <bdsg/checkpoint.hpp>
#include <bdsg/error.hpp>
#include <bdsg/random.hpp>

#include <cmath>
#include <limits>

namespace bdsg {

namespace {

Batch nearest_rows(const Batch& points, const Batch& data) {
  Batch selected(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < data.rows(); ++j) {
      const double d2 = (points.row(i) - data.row(j)).squaredNorm();
      if (d2 < best_d2) {  // strict: ties keep the lowest j
        best_d2 = d2;
        best = j;
      }
    }
    selected.row(i) = data.row(best);
  }
  return selected;
}

}  // namespace

void BdsgHyperparams::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw ConfigError("lambda1 and lambda2 must be non-negative");
  }
  if (batch_size < 1) {
    throw ConfigError("batch size N must be at least 1");
  }
  if (batch_size > sample_size) {
    throw ConfigError("batch size N=" + std::to_string(batch_size) + " exceeds sample size M=" +
                      std::to_string(sample_size));
  }
  if (!(eps_div > 0.0)) {
    throw ConfigError("eps_div must be positive");
  }
  if (epochs < 0) {
    throw ConfigError("epochs must be non-negative");
  }
}

ad::Var loss_l0(ad::Tape& tape, const DensityModel& density, ad::Var outputs) {
  ad::Var log_p;
  try {
    log_p = density.log_density(tape, outputs);
  } catch (const InversionError& e) {
    const std::string where = e.sample_index() ? "sample " + std::to_string(*e.sample_index()) : "a sample";
    throw InversionError(e.residual(), e.sample_index(), "L0: density inversion failed at " + where + ": " + e.what());
  }
  return ad::mean(ad::exp(ad::clamp_min(log_p, kLogDensityFloor)));
}

ad::Var loss_l1(ad::Tape& tape, ad::Var outputs, const Batch& data) {
  if (data.rows() == 0) {
    throw ConfigError("L1 needs a non-empty data set");
  }
  if (data.cols() != outputs.cols()) {
    throw ShapeError("L1: data dimension does not match generator output");
  }
  ad::Var nearest = tape.constant(nearest_rows(outputs.value(), data));
  return ad::mean(ad::row_norm(ad::sub(outputs, nearest)));
}

ad::Var loss_l2(ad::Tape& tape, ad::Var outputs, const Batch& z, double eps_div) {
  const Eigen::Index n = outputs.rows();
  if (n < 2) {
    throw ConfigError("L2 needs a batch of at least two samples");
  }
  if (z.rows() != n) {
    throw ShapeError("L2: latent batch and output batch differ in size");
  }
  Matrix latent = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      latent(i, j) = latent(j, i) = (z.row(i) - z.row(j)).norm();
    }
  }
  // Diagonal terms are 0 / eps_div = 0, so summing the full matrix is exact.
  ad::Var ratios = ad::div(tape.constant(std::move(latent)), ad::add_scalar(ad::pairwise_distances(outputs), eps_div));
  return ad::scale(ad::sum(ratios), 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

double loss_l0(const DensityModel& density, const BoundaryModel& boundary, const Batch& z) {
  ad::Tape tape;
  return loss_l0(tape, density, tape.constant(boundary.network.forward(z))).scalar();
}

double loss_l1(const BoundaryModel& boundary, const Batch& z, const Batch& data) {
  ad::Tape tape;
  return loss_l1(tape, tape.constant(boundary.network.forward(z)), data).scalar();
}

double loss_l2(const BoundaryModel& boundary, const Batch& z, double eps_div) {
  ad::Tape tape;
  return loss_l2(tape, tape.constant(boundary.network.forward(z)), z, eps_div).scalar();
}

LossTerms bdsg_loss(ad::Tape& tape, const DensityModel& density, const MlpVars& network, const Batch& z,
                    const Batch& data, const BdsgHyperparams& hp) {
  ad::Var outputs = forward(network, tape.constant(z));
  LossTerms terms;
  terms.l0 = loss_l0(tape, density, outputs);
  terms.l1 = loss_l1(tape, outputs, data);
  terms.l2 = loss_l2(tape, outputs, z, hp.eps_div);
  terms.total = ad::add(terms.l0, ad::add(ad::scale(terms.l1, hp.lambda1), ad::scale(terms.l2, hp.lambda2)));
  return terms;
}

LossBreakdown bdsg_loss(const DensityModel& density, const BoundaryModel& boundary, const Batch& z,
                        const Batch& data, const BdsgHyperparams& hp) {
  ad::Tape tape;
  const LossTerms terms = bdsg_loss(tape, density, bind(tape, boundary.network, false), z, data, hp);
  LossBreakdown out;
  out.l0 = terms.l0.scalar();
  out.l1 = terms.l1.scalar();
  out.l2 = terms.l2.scalar();
  out.total = out.l0 + hp.lambda1 * out.l1 + hp.lambda2 * out.l2;
  out.epoch = boundary.history.empty() ? 0 : boundary.history.back().epoch;
  return out;
}

BoundaryTrainResult train_boundary(const DensityModel& density, const Batch& data, const std::vector<int>& widths,
                                   const BdsgHyperparams& hp, Activation activation) {
  hp.validate();
  if (data.rows() != hp.sample_size) {
    throw ConfigError("data has " + std::to_string(data.rows()) + " rows but M=" + std::to_string(hp.sample_size));
  }
  if (widths.size() < 2 || widths.back() != density.dim() || data.cols() != density.dim()) {
    throw ConfigError("generator output width, data dimension and density dimension must agree");
  }
  BoundaryTrainResult result;
  result.model.network = Mlp::build(widths, activation, derive_seed(hp.seed, "boundary-init"));
  result.model.latent_dim = widths.front();

  Rng latent_rng(derive_seed(hp.seed, "boundary-latent"));
  OptimizerState state;
  state.options = hp.adam;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const Batch z = standard_normal(hp.batch_size, result.model.latent_dim, latent_rng);
    ad::Tape tape;
    const MlpVars vars = bind(tape, result.model.network, true);
    try {
      const LossTerms terms = bdsg_loss(tape, density, vars, z, data, hp);
      const ad::Gradients grads = tape.gradient(terms.total, "bdsg loss");
      adam_step(result.model.network, collect_gradients(grads, vars), state);
      LossBreakdown row;
      row.l0 = terms.l0.scalar();
      row.l1 = terms.l1.scalar();
      row.l2 = terms.l2.scalar();
      row.total = row.l0 + hp.lambda1 * row.l1 + hp.lambda2 * row.l2;
      row.epoch = epoch;
      result.model.history.push_back(row);
    } catch (const NumericError& e) {
      result.failure = "epoch " + std::to_string(epoch) + ": " + e.what();
      return result;
    }
  }
  return result;
}

Batch sample_boundary(const BoundaryModel& boundary, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) {
    throw ConfigError("sample_boundary needs n >= 1");
  }
  Rng rng(seed);
  return boundary.network.forward(standard_normal(n, boundary.latent_dim, rng));
}

void save_boundary(const std::filesystem::path& path, const BoundaryModel& boundary) {
  checkpoint::save_mlp(path, boundary.network);
}

BoundaryModel load_boundary(const std::filesystem::path& path) {
  BoundaryModel b;
  b.network = checkpoint::load_mlp(path);
  b.latent_dim = b.network.input_dim();
  return b;
}

}  // namespace bdsg
