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

#include <bdsg/density.hpp>
#include <bdsg/error.hpp>

#include <algorithm>
#include <cmath>

namespace bdsg {

double clamped_density(double log_density) noexcept {
  if (std::isnan(log_density)) return std::exp(kLogDensityFloor);
  return std::exp(std::max(log_density, kLogDensityFloor));
}

double DensityModel::log_density(const Point& x) const {
  if (x.size() != dim()) {
    throw ShapeError("point has dimension " + std::to_string(x.size()) + ", density expects " +
                     std::to_string(dim()));
  }
  return log_density(Batch(x.transpose()))(0);
}

}  // namespace bdsg
