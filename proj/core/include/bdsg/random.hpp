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

#include <bdsg/types.hpp>

#include <cstdint>
#include <random>
#include <string_view>

namespace bdsg {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Stage seed = splitmix64(master ^ fnv1a64(stage)). Distinct stages of one
/// experiment get decorrelated streams from a single master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) noexcept;

/// n x d matrix of independent standard normal draws.
Batch standard_normal(Eigen::Index n, Eigen::Index d, Rng& rng);

}  // namespace bdsg
