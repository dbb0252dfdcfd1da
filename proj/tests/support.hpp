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

// Shared oracles for the test binaries.

#include <bdsg/autodiff.hpp>
#include <bdsg/types.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace bdsg::testing {

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Central finite-difference gradient of f at x.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + h;
      const double up = f(probe);
      probe(i, j) = saved - h;
      const double down = f(probe);
      probe(i, j) = saved;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

/// Tape gradient of a scalar-valued builder w.r.t. its single input.
inline Matrix tape_gradient(const std::function<ad::Var(ad::Tape&, ad::Var)>& build, const Matrix& x) {
  ad::Tape tape;
  ad::Var in = tape.variable(x);
  ad::Var out = build(tape, in);
  return tape.gradient(out).wrt(in);
}

inline double tape_value(const std::function<ad::Var(ad::Tape&, ad::Var)>& build, const Matrix& x) {
  ad::Tape tape;
  return build(tape, tape.constant(x)).scalar();
}

/// Largest relative error between analytic and numeric gradients.
inline double gradient_check(const std::function<ad::Var(ad::Tape&, ad::Var)>& build, const Matrix& x,
                             double h = 1e-5) {
  const Matrix analytic = tape_gradient(build, x);
  const Matrix numeric = numeric_gradient([&](const Matrix& p) { return tape_value(build, p); }, x, h);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    worst = std::max(worst, relative_error(analytic.data()[i], numeric.data()[i]));
  }
  return worst;
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bdsg-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Pair-counting AUROC: numerator in half-units, exact in doubles.
inline double auroc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 1) pos += 1; else neg += 1;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / (pos * neg);
}

// Average precision in exact integer arithmetic over a common denominator.
// Valid for n <= 12 (lcm(1..12) = 27720).
inline double auprc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
  constexpr long long kLcm = 27720;
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  long long pos = std::count(y.begin(), y.end(), 1);
  long long num = 0;
  long long prev_tp = 0;
  for (double t : thresholds) {
    long long tp = 0, seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) {
        ++seen;
        tp += y[i];
      }
    }
    num += tp * (tp - prev_tp) * (kLcm / seen);
    prev_tp = tp;
  }
  return static_cast<double>(num) / static_cast<double>(pos * kLcm);
}

}  // namespace bdsg::testing
