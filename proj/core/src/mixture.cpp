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
#include <bdsg/mixture.hpp>

#include <json.hpp>

#include <cmath>

namespace bdsg {

namespace {

using nlohmann::json;

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

}  // namespace

GaussianMixture::GaussianMixture(std::vector<GaussianComponent> components) : components_(std::move(components)) {
  if (components_.empty()) {
    throw ConfigError("mixture needs at least one component");
  }
  dim_ = static_cast<int>(components_.front().mean.size());
  if (dim_ < 1) {
    throw ConfigError("mixture component mean is empty");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    const std::string tag = "component " + std::to_string(k);
    if (!(c.weight > 0.0 && c.weight <= 1.0)) {
      throw ConfigError(tag + ": weight must lie in (0, 1]");
    }
    if (c.mean.size() != dim_ || c.covariance.rows() != dim_ || c.covariance.cols() != dim_) {
      throw ConfigError(tag + ": mean/covariance dimension mismatch");
    }
    if (!c.mean.allFinite() || !c.covariance.allFinite()) {
      throw ConfigError(tag + ": non-finite parameters");
    }
    if (!c.covariance.isApprox(c.covariance.transpose(), 1e-12)) {
      throw ConfigError(tag + ": covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw ConfigError(tag + ": covariance is not positive-definite");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd linv = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(dim_, dim_));
    whiten_.push_back(linv.transpose());
    chol_.push_back(l);
    double log_det_l = 0.0;
    for (int i = 0; i < dim_; ++i) log_det_l += std::log(l(i, i));
    log_scale_.push_back(std::log(c.weight) - log_det_l - 0.5 * dim_ * kLog2Pi);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("mixture weights sum to " + std::to_string(total) + ", expected 1");
  }
}

GaussianMixture GaussianMixture::standard_normal(int dim) {
  return GaussianMixture({{1.0, Point::Zero(dim), Eigen::MatrixXd::Identity(dim, dim)}});
}

GaussianMixture GaussianMixture::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("mixture JSON: ") + e.what());
  }
  try {
    std::vector<GaussianComponent> components;
    for (const auto& item : doc.at("components")) {
      GaussianComponent c;
      c.weight = item.at("weight").get<double>();
      const auto mean = item.at("mean").get<std::vector<double>>();
      c.mean = Eigen::Map<const Point>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      const auto cov = item.at("covariance").get<std::vector<std::vector<double>>>();
      c.covariance.resize(static_cast<Eigen::Index>(cov.size()), static_cast<Eigen::Index>(mean.size()));
      for (std::size_t i = 0; i < cov.size(); ++i) {
        if (cov[i].size() != mean.size()) {
          throw ConfigError("mixture JSON: covariance row " + std::to_string(i) + " has wrong length");
        }
        for (std::size_t j = 0; j < cov[i].size(); ++j) {
          c.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov[i][j];
        }
      }
      components.push_back(std::move(c));
    }
    return GaussianMixture(std::move(components));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mixture JSON: ") + e.what());
  }
}

GaussianMixture GaussianMixture::load(const std::filesystem::path& path) {
  return from_json(checkpoint::read_text_file(path));
}

std::string GaussianMixture::to_json() const {
  json doc;
  doc["components"] = json::array();
  for (const auto& c : components_) {
    json item;
    item["weight"] = c.weight;
    item["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
    std::vector<std::vector<double>> cov;
    for (int i = 0; i < dim_; ++i) {
      std::vector<double> row;
      for (int j = 0; j < dim_; ++j) row.push_back(c.covariance(i, j));
      cov.push_back(std::move(row));
    }
    item["covariance"] = cov;
    doc["components"].push_back(std::move(item));
  }
  return doc.dump(2);
}

Vector GaussianMixture::log_density(const Batch& x) const {
  if (x.cols() != dim_) {
    throw ShapeError("mixture: points have " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(dim_));
  }
  const auto k_count = static_cast<Eigen::Index>(components_.size());
  Matrix terms(x.rows(), k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const Matrix white = (x.rowwise() - components_[ku].mean.transpose()) * whiten_[ku];
    terms.col(k) = (-0.5 * white.rowwise().squaredNorm()).array() + log_scale_[ku];
  }
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = terms.row(i).maxCoeff();
    double v = m;
    if (std::isfinite(m)) {
      v = m + std::log((terms.row(i).array() - m).exp().sum());
    }
    out(i) = std::isfinite(v) ? v : kLogDensityFloor;
  }
  return out;
}

ad::Var GaussianMixture::log_density(ad::Tape& tape, ad::Var x) const {
  if (x.cols() != dim_) {
    throw ShapeError("mixture: points have " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(dim_));
  }
  std::vector<ad::Var> terms;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    ad::Var centered = ad::add_row(x, tape.constant(-components_[k].mean.transpose()));
    ad::Var white = ad::matmul(centered, tape.constant(whiten_[k]));
    terms.push_back(ad::add_scalar(ad::scale(ad::row_sum(ad::square(white)), -0.5), log_scale_[k]));
  }
  return terms.size() == 1 ? terms.front() : ad::logsumexp_rows(ad::hstack(terms));
}

Batch GaussianMixture::sample(Eigen::Index n, Rng& rng) const {
  std::vector<int> labels;
  return sample(n, rng, labels);
}

Batch GaussianMixture::sample(Eigen::Index n, Rng& rng, std::vector<int>& labels) const {
  if (n < 0) {
    throw ConfigError("sample count must be non-negative");
  }
  std::vector<double> weights;
  for (const auto& c : components_) weights.push_back(c.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch out(n, dim_);
  labels.assign(static_cast<std::size_t>(n), 0);
  Vector eps(dim_);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = pick(rng);
    labels[static_cast<std::size_t>(i)] = k;
    for (int j = 0; j < dim_; ++j) eps(j) = normal(rng);
    const auto ku = static_cast<std::size_t>(k);
    out.row(i) = (components_[ku].mean + chol_[ku] * eps).transpose();
  }
  return out;
}

}  // namespace bdsg
