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

// Config-driven pipeline: data -> (flow) -> boundary -> evaluation -> report.
//
// Stage seeds are derive_seed(master, name) for the names "data", "flow",
// "boundary", "boundary-eval", "loss-eval", "test-set" and "ood".

#include <bdsg/boundary.hpp>
#include <bdsg/evaluation.hpp>
#include <bdsg/flow.hpp>
#include <bdsg/mixture.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bdsg {

enum class Backend { cfs, flow };

std::string to_string(Backend backend);
Backend parse_backend(const std::string& name);

struct DataConfig {
  /// Exactly one of mixture / csv_path is set.
  std::optional<GaussianMixture> mixture;
  std::optional<std::filesystem::path> csv_path;
  int samples = 1024;  // M, ignored for CSV input
};

struct FlowConfig {
  FlowOptions model{};
  FlowTrainOptions train{};
  InverseOptions inverse{};
};

struct BoundaryConfig {
  std::vector<int> widths{2, 8, 8, 2};
  Activation activation = Activation::tanh;
  BdsgHyperparams hp{};
  int eval_samples = 1024;
};

struct MetricConfig {
  double epsilon_frac = 0.01;
  double gamma_frac = 0.001;
  /// Held-out normal points and uniform low-density anomalies for AUROC/AUPRC.
  int test_samples = 512;
  /// Shift, in standard deviations of the data, used for the OoD comparison.
  double ood_shift_sd = 10.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  Backend backend = Backend::cfs;
  FlowConfig flow;
  BoundaryConfig boundary;
  GridSpec grid = GridSpec::square(2, -10.0, 10.0, 200);
  MetricConfig metrics;
  /// Also train a flow under the CFS backend so BP2 and grid metrics exist.
  bool reference_flow = false;
  std::filesystem::path output_dir = "bdsg-run";

  /// Relative paths inside `text` resolve against `base_dir`.
  static ExperimentConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Canonical JSON; reloading it yields the same config.
  std::string to_json() const;
  /// Throws ConfigError on any inconsistency (N > M, bad widths, ...).
  void validate() const;
};

/// Hex FNV-1a 64 of the given bytes.
std::string config_hash(const std::string& bytes);

struct RunArtifacts {
  std::filesystem::path output_dir;
  std::filesystem::path config;
  std::filesystem::path manifest;
  std::filesystem::path data_csv;
  std::optional<std::filesystem::path> flow_checkpoint;
  std::optional<std::filesystem::path> flow_history;
  std::optional<std::filesystem::path> boundary_checkpoint;
  std::optional<std::filesystem::path> loss_history;
  std::optional<std::filesystem::path> boundary_samples;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> scatter;
  /// Name of the stage that failed; empty on success.
  std::string failed_stage;
  std::string failure_message;

  bool ok() const { return failed_stage.empty(); }
};

/// Runs every stage, writing artifacts as they are produced. Stage errors are
/// caught, recorded in the manifest and rethrown after the manifest is
/// written, so callers see the original error type.
RunArtifacts run_experiment(const ExperimentConfig& config);

/// Recomputes the hash of `config.json` in `output_dir` and compares it with
/// the manifest. Returns false on mismatch.
bool verify_manifest(const std::filesystem::path& output_dir);

/// Loss-history CSV: epoch,total,l0,l1,l2.
std::string loss_history_csv(const std::vector<LossBreakdown>& history);

/// Red data, green flow samples, blue boundary samples; equal axis scales and
/// a 5% margin around every point. Throws ConfigError for non-2D input.
std::string scatter_svg(const Batch& data, const Batch* flow_samples, const Batch& boundary);
void emit_scatter(const Batch& data, const Batch* flow_samples, const Batch& boundary,
                  const std::filesystem::path& path);

}  // namespace bdsg
