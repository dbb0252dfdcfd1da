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

#include <bdsg/anomaly.hpp>
#include <bdsg/error.hpp>
#include <bdsg/random.hpp>

#include <json.hpp>

#include <cmath>
#include <limits>

namespace bdsg {

Vector safe_log_density(const DensityModel& density, const Batch& x, std::vector<char>* failed) {
  if (failed != nullptr) failed->assign(static_cast<std::size_t>(x.rows()), 0);
  try {
    return density.log_density(x);
  } catch (const InversionError&) {
    // Fall back to row-by-row evaluation so one bad point does not sink the batch.
  }
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    try {
      out(i) = density.log_density(Batch(x.row(i)))(0);
    } catch (const InversionError&) {
      out(i) = kLogDensityFloor;
      if (failed != nullptr) (*failed)[static_cast<std::size_t>(i)] = 1;
    }
  }
  return out;
}

AnomalyVerdict classify(const DensityModel& density, const Point& x, double epsilon) {
  auto verdicts = classify(density, Batch(x.transpose()), epsilon);
  return std::move(verdicts.front());
}

std::vector<AnomalyVerdict> classify(const DensityModel& density, const Batch& x, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw ConfigError("classification threshold epsilon must be positive");
  }
  std::vector<char> failed;
  const Vector log_p = safe_log_density(density, x, &failed);
  std::vector<AnomalyVerdict> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    AnomalyVerdict v;
    v.point = x.row(i).transpose();
    v.log_density = log_p(i);
    v.threshold_epsilon = epsilon;
    v.inversion_failed = failed[static_cast<std::size_t>(i)] != 0;
    v.is_anomalous = v.inversion_failed || std::exp(v.log_density) < epsilon;
    out.push_back(std::move(v));
  }
  return out;
}

std::string to_jsonl(const std::vector<AnomalyVerdict>& verdicts) {
  std::string out;
  for (const auto& v : verdicts) {
    nlohmann::ordered_json j;
    j["point"] = std::vector<double>(v.point.data(), v.point.data() + v.point.size());
    j["log_density"] = v.log_density;
    j["epsilon"] = v.threshold_epsilon;
    j["verdict"] = v.is_anomalous ? "anomalous" : "normal";
    j["flag"] = v.inversion_failed ? nlohmann::ordered_json("inversion-failure") : nlohmann::ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

StrongAnomalies generate_strong_anomalies(const BoundaryModel& boundary, const DensityModel& density, int q,
                                          int reference_batch, double epsilon, std::uint64_t seed) {
  if (reference_batch < 1 || q < reference_batch) {
    throw ConfigError("strong-anomaly generation needs Q >= N >= 1");
  }
  const Batch samples = sample_boundary(boundary, q, seed);
  std::vector<char> failed;
  const Vector log_p = safe_log_density(density, samples, &failed);
  StrongAnomalies out;
  out.generated = static_cast<std::size_t>(q);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    if (failed[static_cast<std::size_t>(i)] || std::exp(log_p(i)) < epsilon) {
      out.indices.push_back(static_cast<std::size_t>(i));
    }
  }
  out.samples.resize(static_cast<Eigen::Index>(out.indices.size()), samples.cols());
  for (std::size_t k = 0; k < out.indices.size(); ++k) {
    out.samples.row(static_cast<Eigen::Index>(k)) = samples.row(static_cast<Eigen::Index>(out.indices[k]));
  }
  return out;
}

void ModeSet::validate() const {
  if (clusters.empty()) {
    throw ConfigError("mode set needs at least one cluster");
  }
  const Eigen::Index d = clusters.front().cols();
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    if (clusters[k].rows() == 0) {
      throw ConfigError("mode cluster " + std::to_string(k) + " is empty");
    }
    if (clusters[k].cols() != d) {
      throw ShapeError("mode clusters disagree on dimension");
    }
  }
}

ModeSet ModeSet::from_labels(const Batch& data, const std::vector<int>& labels, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != data.rows()) {
    throw ShapeError("one label per data row required");
  }
  std::vector<std::vector<Eigen::Index>> rows(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw ConfigError("label out of range");
    rows[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  }
  ModeSet out;
  for (const auto& idx : rows) {
    Batch c(static_cast<Eigen::Index>(idx.size()), data.cols());
    for (std::size_t j = 0; j < idx.size(); ++j) c.row(static_cast<Eigen::Index>(j)) = data.row(idx[j]);
    out.clusters.push_back(std::move(c));
  }
  out.validate();
  return out;
}

ClusterAssignment assign_boundary_cluster(const Point& point, const ModeSet& modes) {
  modes.validate();
  if (point.size() != modes.clusters.front().cols()) {
    throw ShapeError("point dimension does not match the mode set");
  }
  ClusterAssignment best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < modes.clusters.size(); ++k) {
    const double d = std::sqrt((modes.clusters[k].rowwise() - point.transpose()).rowwise().squaredNorm().minCoeff());
    if (d < best.distance) best = {k, d};
  }
  return best;
}

double min_cross_cluster_distance(const ModeSet& modes) {
  modes.validate();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < modes.clusters.size(); ++a) {
    for (std::size_t b = a + 1; b < modes.clusters.size(); ++b) {
      for (Eigen::Index i = 0; i < modes.clusters[a].rows(); ++i) {
        const double d2 = (modes.clusters[b].rowwise() - modes.clusters[a].row(i)).rowwise().squaredNorm().minCoeff();
        best = std::min(best, d2);
      }
    }
  }
  return std::sqrt(best);
}

LossBreakdown ood_score(const BoundaryModel& boundary, const DensityModel& density, const Batch& candidates,
                        const BdsgHyperparams& hp, std::uint64_t seed) {
  if (hp.batch_size < 2) {
    throw ConfigError("OoD scoring needs a latent batch of at least two samples");
  }
  if (candidates.rows() == 0) {
    throw ConfigError("OoD scoring needs a non-empty candidate set");
  }
  Rng rng(seed);
  const Batch z = standard_normal(hp.batch_size, boundary.latent_dim, rng);
  return bdsg_loss(density, boundary, z, candidates, hp);
}

}  // namespace bdsg
