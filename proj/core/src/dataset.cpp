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

#include <bdsg/checkpoint.hpp>
#include <bdsg/dataset.hpp>
#include <bdsg/error.hpp>
#include <bdsg/random.hpp>

#include <charconv>
#include <optional>

namespace bdsg {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_cell(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

SyntheticData generate_synthetic(const GaussianMixture& mixture, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) {
    throw ConfigError("synthetic data needs M >= 1");
  }
  Rng rng(seed);
  SyntheticData out;
  out.points = mixture.sample(m, rng, out.labels);
  return out;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw NumericError("format", "number formatting failed");
  return std::string(buf, ptr);
}

std::string to_csv(const Batch& points) {
  std::string out;
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    if (k > 0) out += ',';
    out += 'x' + std::to_string(k + 1);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
      if (k > 0) out += ',';
      out += format_number(points(i, k));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Batch& points) {
  checkpoint::write_text_file(path, to_csv(points));
}

Batch parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  bool header_allowed = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    std::vector<double> values;
    values.reserve(cells.size());
    std::optional<std::size_t> bad;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_cell(cells[c]);
      if (!v) {
        bad = c;
        break;
      }
      values.push_back(*v);
    }
    if (bad) {
      if (header_allowed) {
        header_allowed = false;
        cols = cells.size();
        continue;
      }
      throw ParseError(line_no, "non-numeric cell in column " + std::to_string(*bad + 1));
    }
    header_allowed = false;
    if (cols == 0) cols = values.size();
    if (values.size() != cols) {
      throw ParseError(line_no, "expected " + std::to_string(cols) + " columns, found " +
                                    std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) {
    throw ParseError(line_no == 0 ? 1 : line_no, "dataset has no numeric rows");
  }
  Batch out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < cols; ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return out;
}

Batch load_dataset(const std::filesystem::path& path) {
  return parse_csv(checkpoint::read_text_file(path));
}

}  // namespace bdsg
