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

#include <bdsg/mixture.hpp>
#include <bdsg/types.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bdsg {

struct SyntheticData {
  Batch points;
  std::vector<int> labels;  // component index per row
};

/// M i.i.d. draws from `mixture` using a generator seeded with `seed`.
SyntheticData generate_synthetic(const GaussianMixture& mixture, Eigen::Index m, std::uint64_t seed);

/// CSV text with header x1..xd and shortest round-trip number formatting.
std::string to_csv(const Batch& points);
void write_csv(const std::filesystem::path& path, const Batch& points);

/// Parses numeric CSV. A first row with any non-numeric cell is a header.
/// Throws ParseError (with the 1-based line) on empty input, ragged rows or
/// bad cells.
Batch parse_csv(std::string_view text);
Batch load_dataset(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace bdsg
