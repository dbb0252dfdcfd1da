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

#include <bdsg/error.hpp>
#include <bdsg/random.hpp>

namespace bdsg {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) noexcept {
  std::uint64_t z = master ^ fnv1a64(stage);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Batch standard_normal(Eigen::Index n, Eigen::Index d, Rng& rng) {
  if (n < 0 || d < 0) {
    throw ConfigError("negative batch shape");
  }
  std::normal_distribution<double> dist(0.0, 1.0);
  Batch out(n, d);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = dist(rng);
  }
  return out;
}

}  // namespace bdsg
