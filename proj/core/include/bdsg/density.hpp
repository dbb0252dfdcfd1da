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

#include <bdsg/autodiff.hpp>
#include <bdsg/types.hpp>

#include <string>

namespace bdsg {

/// Log-densities below this are clamped before exponentiation so that
/// exp() never underflows to exactly zero.
inline constexpr double kLogDensityFloor = -745.0;

/// exp(max(log_density, kLogDensityFloor)).
double clamped_density(double log_density) noexcept;

/// Anything that can report log p(x). Implementations are immutable once
/// built, so concurrent calls on a frozen model are safe.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual int dim() const = 0;
  /// Short backend tag written into reports ("cfs" or "flow").
  virtual std::string kind() const = 0;

  /// One value per row. Flow models throw InversionError naming the row.
  virtual Vector log_density(const Batch& x) const = 0;
  double log_density(const Point& x) const;

  /// Differentiable in `x` (n x d); returns n x 1.
  virtual ad::Var log_density(ad::Tape& tape, ad::Var x) const = 0;
};

}  // namespace bdsg
