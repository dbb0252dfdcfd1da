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

#include <bdsg/boundary.hpp>
#include <bdsg/density.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace bdsg {

struct AnomalyVerdict {
  Point point;
  double log_density = 0.0;
  /// Absolute probability-density threshold.
  double threshold_epsilon = 0.0;
  /// exp(log_density) < threshold_epsilon.
  bool is_anomalous = false;
  /// The density could not be evaluated because the flow inverse diverged.
  /// Such points are reported as anomalous with log_density at the floor.
  bool inversion_failed = false;
};

/// Evaluates log p for every row, mapping inversion failures to
/// kLogDensityFloor. `failed`, when given, marks the rows that failed.
Vector safe_log_density(const DensityModel& density, const Batch& x, std::vector<char>* failed = nullptr);

AnomalyVerdict classify(const DensityModel& density, const Point& x, double epsilon);
std::vector<AnomalyVerdict> classify(const DensityModel& density, const Batch& x, double epsilon);

/// One JSON object per line: {"point", "log_density", "epsilon", "verdict", "flag"}.
std::string to_jsonl(const std::vector<AnomalyVerdict>& verdicts);

struct StrongAnomalies {
  Batch samples;
  std::size_t generated = 0;
  /// Row of each retained sample within the generated batch.
  std::vector<std::size_t> indices;
};

/// Draws Q >= reference_batch boundary samples and keeps those with density
/// strictly below epsilon.
StrongAnomalies generate_strong_anomalies(const BoundaryModel& boundary, const DensityModel& density, int q,
                                          int reference_batch, double epsilon, std::uint64_t seed);

/// K clusters of reference points, one per mode.
struct ModeSet {
  std::vector<Batch> clusters;

  void validate() const;
  /// Splits rows of `data` by integer label in [0, K).
  static ModeSet from_labels(const Batch& data, const std::vector<int>& labels, int k);
};

struct ClusterAssignment {
  std::size_t cluster = 0;
  double distance = 0.0;
};

/// argmin over clusters of the distance from `point` to the cluster's point
/// set. Ties go to the lowest cluster index.
ClusterAssignment assign_boundary_cluster(const Point& point, const ModeSet& modes);

/// Smallest distance between points of two different clusters.
double min_cross_cluster_distance(const ModeSet& modes);

/// The training loss evaluated with `candidates` in place of the normal data
/// in L1, on a fresh latent batch of size hp.batch_size drawn with `seed`.
/// Low total and L1 mean the candidate set looks like the training
/// distribution.
LossBreakdown ood_score(const BoundaryModel& boundary, const DensityModel& density, const Batch& candidates,
                        const BdsgHyperparams& hp, std::uint64_t seed);

}  // namespace bdsg
