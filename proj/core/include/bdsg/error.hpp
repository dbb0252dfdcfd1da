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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace bdsg {

enum class ErrorKind {
  configuration,
  shape,
  numeric,
  inversion,
  io,
  parse,
  undefined_metric,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::configuration, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::shape, what) {}
};

/// A non-finite value showed up where a finite one was required. `term`
/// names the quantity (e.g. "l0", "gradient").
class NumericError : public Error {
 public:
  NumericError(std::string term, const std::string& what)
      : Error(ErrorKind::numeric, what), term_(std::move(term)) {}

  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// Fixed-point inversion of a residual block did not converge. Usually means
/// the block's Lipschitz constant is not below one.
class InversionError : public Error {
 public:
  InversionError(double residual, std::optional<std::size_t> sample_index, const std::string& what)
      : Error(ErrorKind::inversion, what), residual_(residual), sample_index_(sample_index) {}

  double residual() const noexcept { return residual_; }
  std::optional<std::size_t> sample_index() const noexcept { return sample_index_; }

 private:
  double residual_;
  std::optional<std::size_t> sample_index_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what) : Error(ErrorKind::undefined_metric, what) {}
};

}  // namespace bdsg
