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
#include <bdsg/error.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bdsg::checkpoint {

namespace {

long parse_int(const std::string& token, std::size_t line) {
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (errno != 0 || end == token.c_str() || *end != '\0') {
    throw ParseError(line, "expected an integer, got '" + token + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& token, std::size_t line) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
  if (errno != 0 || end == token.c_str() || *end != '\0') {
    throw ParseError(line, "expected an unsigned integer, got '" + token + "'");
  }
  return static_cast<std::uint64_t>(v);
}

void write_values(std::ostream& out, std::string_view keyword, const Matrix& m) {
  out << keyword;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    out << ' ' << format_double(m.data()[i]);
  }
  out << '\n';
}

Matrix read_values(Reader& reader, std::string_view keyword, Eigen::Index rows, Eigen::Index cols) {
  const auto tokens = reader.expect(keyword);
  if (static_cast<Eigen::Index>(tokens.size()) != rows * cols + 1) {
    throw ParseError(reader.line(), std::string(keyword) + ": expected " + std::to_string(rows * cols) +
                                        " values, got " + std::to_string(tokens.size() - 1));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = parse_double(tokens[static_cast<std::size_t>(i) + 1], reader.line());
  }
  return m;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", value);
  return buf;
}

double parse_double(std::string_view token, std::size_t line) {
  const std::string s(token);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(line, "expected a number, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> Reader::next_line() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    std::istringstream ss(text);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (!tokens.empty()) return tokens;
  }
  throw ParseError(line_, "unexpected end of checkpoint");
}

std::vector<std::string> Reader::expect(std::string_view keyword, std::size_t min_tokens) {
  auto tokens = next_line();
  if (tokens.front() != keyword) {
    throw ParseError(line_, "expected '" + std::string(keyword) + "', got '" + tokens.front() + "'");
  }
  if (tokens.size() < min_tokens) {
    throw ParseError(line_, "'" + std::string(keyword) + "' line is truncated");
  }
  return tokens;
}

void write_mlp(std::ostream& out, const Mlp& model) {
  out << "bdsg-mlp " << kFormatVersion << '\n';
  out << "seed " << model.seed() << '\n';
  out << "activation " << to_string(model.activation()) << '\n';
  out << "widths " << model.widths().size();
  for (int w : model.widths()) out << ' ' << w;
  out << '\n';
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& layer = model.layers()[l];
    out << "layer " << l << ' ' << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
    write_values(out, "weight", layer.weight);
    write_values(out, "bias", layer.bias);
  }
  out << "end-mlp\n";
}

Mlp read_mlp(std::istream& in) {
  Reader reader(in);
  const auto header = reader.expect("bdsg-mlp", 2);
  if (parse_int(header[1], reader.line()) != kFormatVersion) {
    throw ParseError(reader.line(), "unsupported checkpoint version " + header[1]);
  }
  const std::uint64_t seed = parse_u64(reader.expect("seed", 2)[1], reader.line());
  const Activation activation = parse_activation(reader.expect("activation", 2)[1]);
  const auto width_tokens = reader.expect("widths", 2);
  const long count = parse_int(width_tokens[1], reader.line());
  if (count < 2 || static_cast<std::size_t>(count) + 2 != width_tokens.size()) {
    throw ParseError(reader.line(), "malformed widths line");
  }
  std::vector<int> widths;
  for (long k = 0; k < count; ++k) {
    widths.push_back(static_cast<int>(parse_int(width_tokens[static_cast<std::size_t>(k) + 2], reader.line())));
  }
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto tokens = reader.expect("layer", 4);
    const long rows = parse_int(tokens[2], reader.line());
    const long cols = parse_int(tokens[3], reader.line());
    if (static_cast<std::size_t>(parse_int(tokens[1], reader.line())) != l || rows != widths[l + 1] ||
        cols != widths[l]) {
      throw ParseError(reader.line(), "layer header does not match widths");
    }
    DenseLayer layer;
    layer.weight = read_values(reader, "weight", rows, cols);
    layer.bias = read_values(reader, "bias", 1, rows);
    layers.push_back(std::move(layer));
  }
  reader.expect("end-mlp");
  return Mlp(std::move(widths), activation, std::move(layers), seed);
}

void save_mlp(const std::filesystem::path& path, const Mlp& model) {
  std::ostringstream out;
  write_mlp(out, model);
  write_text_file(path, out.str());
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return read_mlp(in);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << contents;
  if (!out) {
    throw IoError("write to '" + path.string() + "' failed");
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace bdsg::checkpoint
