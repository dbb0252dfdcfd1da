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

// Grid- and sample-based quality metrics. All thresholds are fractions of a
// peak density, so a density model and the truth are each compared against
// their own peak.

#include <bdsg/density.hpp>
#include <bdsg/mixture.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace bdsg {

/// Regular axis-aligned grid with `resolution[k]` points per axis, endpoints
/// included.
struct GridSpec {
  Point lower;
  Point upper;
  std::vector<int> resolution;
  std::size_t max_cells = 1'000'000;

  static GridSpec square(int dim, double lo, double hi, int points_per_axis);

  int dim() const { return static_cast<int>(lower.size()); }
  /// Throws ConfigError on empty, inverted or oversized grids.
  void validate() const;
  std::size_t size() const;
  Batch points() const;
  /// Flat index of the grid point closest to `x` (coordinates clamped).
  std::size_t nearest(const Point& x) const;
};

/// Density values of a model on a grid, with failed evaluations at the floor.
struct GridField {
  Vector log_density;
  double peak = 0.0;  // max density over the grid and any extra points
};

GridField evaluate_on_grid(const DensityModel& model, const GridSpec& grid, const Batch* extra_points = nullptr);

/// Highest density of a Gaussian mixture, located by fixed-point iteration
/// from every component mean.
double mixture_peak(const GaussianMixture& mixture);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

/// Grid agreement between the model's and the truth's epsilon support sets.
/// The normal (in-support) class is the positive class. Zero-denominator
/// ratios are 1 when nothing was missed (degenerate-perfect) and 0 otherwise;
/// either case sets `degenerate`.
struct GridMetrics {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool degenerate = false;
};

GridMetrics grid_metrics(const GridField& truth, const GridField& model, double epsilon_frac);
GridMetrics grid_metrics(const DensityModel& truth, double truth_peak, const DensityModel& model, double model_peak,
                         const GridSpec& grid, double epsilon_frac);

/// True when gamma * peak <= p <= epsilon * peak (relative slack 1e-12 on both
/// edges so points placed exactly on a contour count).
bool in_band(double density, double peak, double gamma_frac, double epsilon_frac);

/// Fraction of samples whose truth density lies in the [gamma, epsilon] band.
double bp1(const Batch& samples, const DensityModel& truth, double truth_peak, double gamma_frac,
           double epsilon_frac);

/// Fraction of samples whose nearest grid point lies in the band of both the
/// model and the truth (each relative to its own peak).
double bp2(const Batch& samples, const GridSpec& grid, const GridField& model, const GridField& truth,
           double gamma_frac, double epsilon_frac);

/// Area under the ROC curve; label 1 is the positive (anomalous) class and
/// higher scores mean more anomalous. Ties earn half credit.
/// Throws UndefinedMetricError when either class is empty.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Average precision, sum over distinct thresholds of precision * recall step.
/// Tied scores enter as one group. Throws UndefinedMetricError without positives.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Mean Euclidean distance over all unordered pairs of rows.
double dispersion(const Batch& samples);

struct EvalReport {
  std::optional<GridMetrics> grid;
  std::optional<double> bp1;
  std::optional<double> bp2;
  std::optional<double> auroc;
  std::optional<double> auprc;
  std::optional<double> dispersion;
  double epsilon_frac = 0.01;
  double gamma_frac = 0.001;

  std::string to_json() const;
};

/// CSV with columns x1..xd,log_truth,log_model for plotting.
std::string grid_csv(const GridSpec& grid, const GridField& truth, const GridField& model);

}  // namespace bdsg
