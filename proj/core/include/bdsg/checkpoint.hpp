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

// Text checkpoint container, format version 1. See docs/checkpoint-format.md.
//
// Values are written as C99 hexadecimal floats ("%a"), so a save/load cycle
// reproduces every parameter bit for bit.

#include <bdsg/mlp.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace bdsg::checkpoint {

inline constexpr int kFormatVersion = 1;

std::string format_double(double value);
double parse_double(std::string_view token, std::size_t line);

void write_mlp(std::ostream& out, const Mlp& model);
Mlp read_mlp(std::istream& in);

void save_mlp(const std::filesystem::path& path, const Mlp& model);
Mlp load_mlp(const std::filesystem::path& path);

/// Line-oriented tokenizer shared by the model readers.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Reads the next non-empty line and splits it on whitespace.
  std::vector<std::string> next_line();
  /// Reads a line and checks that its first token is `keyword`.
  std::vector<std::string> expect(std::string_view keyword, std::size_t min_tokens = 1);
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace bdsg::checkpoint
