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
#include <bdsg/evaluation.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bdsg {

namespace {

// Neumaier compensated sum.
class Accumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double ratio_or_degenerate(std::size_t num, std::size_t den, bool nothing_missed, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return nothing_missed ? 1.0 : 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

void check_binary(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("scores and labels differ in length");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw ConfigError("labels must be 0 or 1");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("score", "non-finite score");
  }
}

}  // namespace

GridSpec GridSpec::square(int dim, double lo, double hi, int points_per_axis) {
  GridSpec g;
  g.lower = Point::Constant(dim, lo);
  g.upper = Point::Constant(dim, hi);
  g.resolution.assign(static_cast<std::size_t>(dim), points_per_axis);
  return g;
}

void GridSpec::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size() ||
      static_cast<std::size_t>(lower.size()) != resolution.size()) {
    throw ConfigError("grid bounds and resolution must share a non-zero dimension");
  }
  for (Eigen::Index k = 0; k < lower.size(); ++k) {
    if (!(lower(k) < upper(k))) throw ConfigError("grid lower bound must be below upper bound");
    if (resolution[static_cast<std::size_t>(k)] < 2) throw ConfigError("grid needs at least two points per axis");
  }
  double cells = 1.0;
  for (int r : resolution) cells *= r;
  if (cells > static_cast<double>(max_cells)) {
    throw ConfigError("grid has " + std::to_string(static_cast<long long>(cells)) + " points, above the cap of " +
                      std::to_string(max_cells));
  }
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (int r : resolution) n *= static_cast<std::size_t>(r);
  return n;
}

Batch GridSpec::points() const {
  validate();
  const std::size_t n = size();
  const int d = dim();
  Batch out(static_cast<Eigen::Index>(n), d);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t rest = flat;
    // Last axis varies fastest.
    for (int k = d - 1; k >= 0; --k) {
      const auto r = static_cast<std::size_t>(resolution[static_cast<std::size_t>(k)]);
      const std::size_t i = rest % r;
      rest /= r;
      out(static_cast<Eigen::Index>(flat), k) =
          lower(k) + (upper(k) - lower(k)) * static_cast<double>(i) / static_cast<double>(r - 1);
    }
  }
  return out;
}

std::size_t GridSpec::nearest(const Point& x) const {
  if (x.size() != lower.size()) throw ShapeError("point dimension does not match the grid");
  std::size_t flat = 0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const int r = resolution[static_cast<std::size_t>(k)];
    const double t = (x(k) - lower(k)) / (upper(k) - lower(k)) * (r - 1);
    const long i = std::clamp(std::lround(t), 0L, static_cast<long>(r - 1));
    flat = flat * static_cast<std::size_t>(r) + static_cast<std::size_t>(i);
  }
  return flat;
}

GridField evaluate_on_grid(const DensityModel& model, const GridSpec& grid, const Batch* extra_points) {
  GridField field;
  field.log_density = safe_log_density(model, grid.points());
  double peak_log = field.log_density.maxCoeff();
  if (extra_points != nullptr && extra_points->rows() > 0) {
    peak_log = std::max(peak_log, safe_log_density(model, *extra_points).maxCoeff());
  }
  field.peak = std::exp(peak_log);
  return field;
}

double mixture_peak(const GaussianMixture& mixture) {
  const auto& comps = mixture.components();
  std::vector<Matrix> precisions;
  for (const auto& c : comps) precisions.push_back(c.covariance.inverse());
  // Start from every mean and from the weighted centroid, which is the mode
  // of symmetric mixtures whose components have merged into one flat top.
  std::vector<Point> starts;
  Point centroid = Point::Zero(mixture.dim());
  for (const auto& c : comps) {
    starts.push_back(c.mean);
    centroid += c.weight * c.mean;
  }
  starts.push_back(centroid);
  double best = 0.0;
  for (const auto& start : starts) {
    Point x = start;
    for (int it = 0; it < 10000; ++it) {
      const Vector log_p_k = [&] {
        Vector v(static_cast<Eigen::Index>(comps.size()));
        for (std::size_t k = 0; k < comps.size(); ++k) {
          const Point diff = x - comps[k].mean;
          v(static_cast<Eigen::Index>(k)) = std::log(comps[k].weight) - 0.5 * diff.dot(precisions[k] * diff) -
                                            0.5 * std::log(comps[k].covariance.determinant());
        }
        return v;
      }();
      const Vector r = (log_p_k.array() - log_p_k.maxCoeff()).exp();
      Matrix a = Matrix::Zero(x.size(), x.size());
      Point b = Point::Zero(x.size());
      for (std::size_t k = 0; k < comps.size(); ++k) {
        a += r(static_cast<Eigen::Index>(k)) * precisions[k];
        b += r(static_cast<Eigen::Index>(k)) * (precisions[k] * comps[k].mean);
      }
      const Point next = a.ldlt().solve(b);
      const double step = (next - x).norm();
      x = next;
      if (step < 1e-13) break;
    }
    best = std::max(best, std::exp(mixture.log_density(x)));
    best = std::max(best, std::exp(mixture.log_density(start)));
  }
  return best;
}

GridMetrics grid_metrics(const GridField& truth, const GridField& model, double epsilon_frac) {
  if (truth.log_density.size() != model.log_density.size()) {
    throw ShapeError("grid fields differ in size");
  }
  if (!(epsilon_frac > 0.0)) throw ConfigError("epsilon fraction must be positive");
  GridMetrics m;
  const double t_eps = epsilon_frac * truth.peak;
  const double m_eps = epsilon_frac * model.peak;
  for (Eigen::Index i = 0; i < truth.log_density.size(); ++i) {
    const bool actual = std::exp(truth.log_density(i)) >= t_eps;
    const bool predicted = std::exp(model.log_density(i)) >= m_eps;
    if (actual && predicted) ++m.counts.tp;
    else if (!actual && predicted) ++m.counts.fp;
    else if (actual) ++m.counts.fn;
    else ++m.counts.tn;
  }
  const auto& c = m.counts;
  m.precision = ratio_or_degenerate(c.tp, c.tp + c.fp, c.fn == 0, m.degenerate);
  m.recall = ratio_or_degenerate(c.tp, c.tp + c.fn, c.fp == 0, m.degenerate);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.tp + c.fp + c.tn + c.fn);
  return m;
}

GridMetrics grid_metrics(const DensityModel& truth, double truth_peak, const DensityModel& model, double model_peak,
                         const GridSpec& grid, double epsilon_frac) {
  GridField t = evaluate_on_grid(truth, grid);
  GridField f = evaluate_on_grid(model, grid);
  t.peak = truth_peak;
  f.peak = model_peak;
  return grid_metrics(t, f, epsilon_frac);
}

bool in_band(double density, double peak, double gamma_frac, double epsilon_frac) {
  constexpr double kSlack = 1e-12;
  return density >= gamma_frac * peak * (1.0 - kSlack) && density <= epsilon_frac * peak * (1.0 + kSlack);
}

namespace {

void check_band(double gamma_frac, double epsilon_frac) {
  if (!(gamma_frac > 0.0) || !(gamma_frac < epsilon_frac)) {
    throw ConfigError("band needs 0 < gamma < epsilon");
  }
}

}  // namespace

double bp1(const Batch& samples, const DensityModel& truth, double truth_peak, double gamma_frac,
           double epsilon_frac) {
  check_band(gamma_frac, epsilon_frac);
  if (samples.rows() == 0) throw ConfigError("BP1 of an empty sample set");
  const Vector log_p = safe_log_density(truth, samples);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < log_p.size(); ++i) {
    hits += in_band(std::exp(log_p(i)), truth_peak, gamma_frac, epsilon_frac) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.rows());
}

double bp2(const Batch& samples, const GridSpec& grid, const GridField& model, const GridField& truth,
           double gamma_frac, double epsilon_frac) {
  check_band(gamma_frac, epsilon_frac);
  if (samples.rows() == 0) throw ConfigError("BP2 of an empty sample set");
  if (static_cast<std::size_t>(model.log_density.size()) != grid.size() ||
      static_cast<std::size_t>(truth.log_density.size()) != grid.size()) {
    throw ShapeError("grid fields do not match the grid");
  }
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const auto cell = static_cast<Eigen::Index>(grid.nearest(samples.row(i).transpose()));
    const bool ok = in_band(std::exp(model.log_density(cell)), model.peak, gamma_frac, epsilon_frac) &&
                    in_band(std::exp(truth.log_density(cell)), truth.peak, gamma_frac, epsilon_frac);
    hits += ok ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.rows());
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels);
  const std::size_t n = scores.size();
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetricError("AUROC needs both classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with mid-ranks for ties.
  Accumulator rank_sum;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum.add(mid_rank);
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum.value() - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels);
  const std::size_t n = scores.size();
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0) throw UndefinedMetricError("AUPRC needs at least one positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  // Extended-precision accumulation so the result is the correctly rounded
  // value of the rational step sum on small inputs.
  long double ap = 0.0L;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      group_pos += labels[order[j]] == 1 ? 1 : 0;
      ++j;
    }
    tp += group_pos;
    seen = j;
    if (group_pos > 0) {
      ap += static_cast<long double>(tp) * static_cast<long double>(group_pos) /
            (static_cast<long double>(seen) * static_cast<long double>(pos));
    }
    i = j;
  }
  return static_cast<double>(ap);
}

double dispersion(const Batch& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) throw ConfigError("dispersion needs at least two samples");
  Accumulator total;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) total.add((samples.row(i) - samples.row(j)).norm());
  }
  return total.value() / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["epsilon_frac"] = epsilon_frac;
  j["gamma_frac"] = gamma_frac;
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  if (grid) {
    j["grid"] = {{"precision", grid->precision},
                 {"recall", grid->recall},
                 {"f1", grid->f1},
                 {"accuracy", grid->accuracy},
                 {"degenerate", grid->degenerate},
                 {"tp", grid->counts.tp},
                 {"fp", grid->counts.fp},
                 {"tn", grid->counts.tn},
                 {"fn", grid->counts.fn}};
  } else {
    j["grid"] = nullptr;
  }
  j["bp1"] = opt(bp1);
  j["bp2"] = opt(bp2);
  j["auroc"] = opt(auroc);
  j["auprc"] = opt(auprc);
  j["dispersion"] = opt(dispersion);
  return j.dump(2);
}

std::string grid_csv(const GridSpec& grid, const GridField& truth, const GridField& model) {
  const Batch pts = grid.points();
  std::ostringstream out;
  out.precision(17);
  for (int k = 0; k < grid.dim(); ++k) out << 'x' << (k + 1) << ',';
  out << "log_truth,log_model\n";
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (int k = 0; k < grid.dim(); ++k) out << pts(i, k) << ',';
    out << truth.log_density(i) << ',' << model.log_density(i) << '\n';
  }
  return out.str();
}

}  // namespace bdsg
