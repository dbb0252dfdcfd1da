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

// bdsg: command-line front end for the boundary generator pipeline.
//
// Exit codes: 0 success, 2 validation, 3 numeric, 4 I/O.

#include <bdsg/anomaly.hpp>
#include <bdsg/checkpoint.hpp>
#include <bdsg/dataset.hpp>
#include <bdsg/error.hpp>
#include <bdsg/evaluation.hpp>
#include <bdsg/experiment.hpp>
#include <bdsg/random.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace bdsg;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

// Flags that mirror ExperimentConfig fields. Unset flags leave the config
// (file or defaults) untouched.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> mixture;
  std::optional<std::string> data;
  std::optional<int> samples;
  std::optional<std::string> output_dir;
  std::optional<int> flow_epochs;
  std::optional<int> flow_blocks;
  std::optional<int> flow_batch_size;
  std::optional<double> flow_lr;
  std::optional<double> flow_final_lr_fraction;
  std::optional<std::vector<int>> widths;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::optional<int> batch_size;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<double> epsilon_frac;
  std::optional<double> gamma_frac;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  std::optional<int> grid_res;
  bool reference_flow = false;
};

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "Experiment config (JSON)");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--backend", o.backend, "Density backend: cfs or flow");
  app->add_option("--mixture", o.mixture, "Gaussian-mixture JSON");
  app->add_option("--data", o.data, "Dataset CSV");
  app->add_option("--samples", o.samples, "Sample size M for synthetic data");
  app->add_option("--output-dir", o.output_dir, "Output directory");
  app->add_option("--flow-epochs", o.flow_epochs, "Flow training epochs");
  app->add_option("--flow-blocks", o.flow_blocks, "Residual blocks");
  app->add_option("--flow-batch-size", o.flow_batch_size, "Flow minibatch size");
  app->add_option("--flow-lr", o.flow_lr, "Flow learning rate");
  app->add_option("--flow-final-lr-fraction", o.flow_final_lr_fraction,
                  "Final flow learning rate as a fraction of the initial one (cosine schedule)");
  app->add_option("--widths", o.widths, "Boundary generator widths, e.g. 2,8,8,2")->delimiter(',');
  app->add_option("--lambda1", o.lambda1, "Weight of the data-distance term");
  app->add_option("--lambda2", o.lambda2, "Weight of the dispersion term");
  app->add_option("--batch-size", o.batch_size, "Latent batch size N");
  app->add_option("--epochs", o.epochs, "Boundary training epochs");
  app->add_option("--lr", o.lr, "Boundary learning rate");
  app->add_option("--epsilon-frac", o.epsilon_frac, "Epsilon as a fraction of the peak density");
  app->add_option("--gamma-frac", o.gamma_frac, "Gamma as a fraction of the peak density");
  app->add_option("--grid-lo", o.grid_lo, "Lower grid bound on every axis");
  app->add_option("--grid-hi", o.grid_hi, "Upper grid bound on every axis");
  app->add_option("--grid-res", o.grid_res, "Grid points per axis");
  app->add_flag("--reference-flow", o.reference_flow, "Train a flow under the cfs backend for BP2");
}

ExperimentConfig build_config(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) c = ExperimentConfig::load(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.backend) c.backend = parse_backend(*o.backend);
  if (o.mixture) {
    c.data.mixture = GaussianMixture::load(*o.mixture);
    c.data.csv_path.reset();
  }
  if (o.data) {
    c.data.csv_path = fs::path(*o.data);
    c.data.mixture.reset();
  }
  if (o.samples) c.data.samples = *o.samples;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.flow_epochs) c.flow.train.epochs = *o.flow_epochs;
  if (o.flow_blocks) c.flow.model.blocks = *o.flow_blocks;
  if (o.flow_batch_size) c.flow.train.batch_size = *o.flow_batch_size;
  if (o.flow_lr) c.flow.train.adam.learning_rate = *o.flow_lr;
  if (o.flow_final_lr_fraction) c.flow.train.final_lr_fraction = *o.flow_final_lr_fraction;
  if (o.widths) c.boundary.widths = *o.widths;
  if (o.lambda1) c.boundary.hp.lambda1 = *o.lambda1;
  if (o.lambda2) c.boundary.hp.lambda2 = *o.lambda2;
  if (o.batch_size) c.boundary.hp.batch_size = *o.batch_size;
  if (o.epochs) c.boundary.hp.epochs = *o.epochs;
  if (o.lr) c.boundary.hp.adam.learning_rate = *o.lr;
  if (o.epsilon_frac) c.metrics.epsilon_frac = *o.epsilon_frac;
  if (o.gamma_frac) c.metrics.gamma_frac = *o.gamma_frac;
  if (o.grid_lo || o.grid_hi || o.grid_res) {
    const int d = c.data.mixture ? c.data.mixture->dim() : c.grid.dim();
    const double lo = o.grid_lo.value_or(c.grid.lower(0));
    const double hi = o.grid_hi.value_or(c.grid.upper(0));
    const int res = o.grid_res.value_or(c.grid.resolution.front());
    c.grid = GridSpec::square(d, lo, hi, res);
  }
  if (o.reference_flow) c.reference_flow = true;
  return c;
}

// Training data: the CSV if given, otherwise a fresh draw from the mixture
// with the same stage seed the pipeline uses.
Batch training_data(const ExperimentConfig& c) {
  if (c.data.csv_path) return load_dataset(*c.data.csv_path);
  if (c.data.mixture) {
    return generate_synthetic(*c.data.mixture, c.data.samples, derive_seed(c.seed, "data")).points;
  }
  throw ConfigError("no data source: pass --data or --mixture");
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    checkpoint::write_text_file(path, text);
  }
}

int run_gen_data(const Overrides& o, const std::string& out) {
  const ExperimentConfig c = build_config(o);
  if (!c.data.mixture) throw ConfigError("gen-data needs a mixture (--mixture or config data.mixture)");
  const SyntheticData d = generate_synthetic(*c.data.mixture, c.data.samples, derive_seed(c.seed, "data"));
  write_output(out, to_csv(d.points));
  return kExitOk;
}

int run_train_flow(const Overrides& o, const std::string& out, const std::string& history) {
  const ExperimentConfig c = build_config(o);
  const Batch data = training_data(c);
  FlowOptions fo = c.flow.model;
  fo.dim = static_cast<int>(data.cols());
  fo.seed = derive_seed(c.seed, "flow");
  FlowModel model = FlowModel::build(fo);
  model.set_inverse_options(c.flow.inverse);
  FlowTrainOptions to = c.flow.train;
  to.seed = derive_seed(c.seed, "flow-train");
  const FlowTrainResult r = train_flow(std::move(model), data, to);
  save_flow(out, r.flow);
  if (!history.empty()) {
    std::string csv = "epoch,nll\n";
    for (std::size_t e = 0; e < r.history.size(); ++e) csv += std::to_string(e) + ',' + format_number(r.history[e]) + '\n';
    checkpoint::write_text_file(history, csv);
  }
  if (r.failure) throw NumericError("flow", *r.failure);
  if (!r.history.empty()) std::cerr << "final nll " << r.history.back() << '\n';
  return kExitOk;
}

std::unique_ptr<DensityModel> load_density(const ExperimentConfig& c, const std::string& flow_path) {
  if (!flow_path.empty()) return std::make_unique<FlowModel>(load_flow(flow_path));
  if (c.data.mixture) return std::make_unique<GaussianMixture>(*c.data.mixture);
  throw ConfigError("no density model: pass --flow or --mixture");
}

int run_train_boundary(const Overrides& o, const std::string& flow_path, const std::string& out,
                       const std::string& history) {
  const ExperimentConfig c = build_config(o);
  const Batch data = training_data(c);
  const auto density = load_density(c, flow_path);
  BdsgHyperparams hp = c.boundary.hp;
  hp.sample_size = static_cast<int>(data.rows());
  hp.seed = derive_seed(c.seed, "boundary");
  const BoundaryTrainResult r = train_boundary(*density, data, c.boundary.widths, hp, c.boundary.activation);
  save_boundary(out, r.model);
  if (!history.empty()) checkpoint::write_text_file(history, loss_history_csv(r.model.history));
  if (r.failure) throw NumericError("boundary", *r.failure);
  if (!r.model.history.empty()) {
    const auto& last = r.model.history.back();
    std::cerr << "final loss " << last.total << " (l0 " << last.l0 << ", l1 " << last.l1 << ", l2 " << last.l2
              << ")\n";
  }
  return kExitOk;
}

int run_score(const Overrides& o, const std::string& flow_path, const std::string& input,
              std::optional<double> epsilon, const std::string& boundary_path, const std::string& out) {
  const ExperimentConfig c = build_config(o);
  const auto density = load_density(c, flow_path);
  const Batch points = load_dataset(input);
  if (!boundary_path.empty()) {
    // OoD mode: the loss with `points` standing in for the normal data.
    const BoundaryModel b = load_boundary(boundary_path);
    const LossBreakdown l = ood_score(b, *density, points, c.boundary.hp, derive_seed(c.seed, "ood"));
    nlohmann::ordered_json j{{"total", l.total}, {"l0", l.l0}, {"l1", l.l1}, {"l2", l.l2}};
    write_output(out, j.dump(2) + "\n");
    return kExitOk;
  }
  double eps = 0.0;
  if (epsilon) {
    eps = *epsilon;
  } else if (flow_path.empty() && c.data.mixture) {
    eps = c.metrics.epsilon_frac * mixture_peak(*c.data.mixture);
  } else {
    // Flow peak from the grid plus the scored points.
    eps = c.metrics.epsilon_frac * evaluate_on_grid(*density, c.grid, &points).peak;
  }
  write_output(out, to_jsonl(classify(*density, points, eps)));
  return kExitOk;
}

int run_eval(const Overrides& o, const std::string& flow_path, const std::string& boundary_path,
             const std::string& out) {
  const ExperimentConfig c = build_config(o);
  if (!c.data.mixture) throw ConfigError("eval needs the true mixture (--mixture or config)");
  const GaussianMixture& truth = *c.data.mixture;
  EvalReport report;
  report.epsilon_frac = c.metrics.epsilon_frac;
  report.gamma_frac = c.metrics.gamma_frac;
  const double truth_peak = mixture_peak(truth);
  GridField truth_field = evaluate_on_grid(truth, c.grid);
  truth_field.peak = truth_peak;
  std::optional<FlowModel> flow;
  std::optional<GridField> flow_field;
  if (!flow_path.empty()) {
    flow = load_flow(flow_path);
    const Batch data = training_data(c);
    flow_field = evaluate_on_grid(*flow, c.grid, &data);
    report.grid = grid_metrics(truth_field, *flow_field, report.epsilon_frac);
  }
  if (!boundary_path.empty()) {
    const BoundaryModel b = load_boundary(boundary_path);
    const Batch samples = sample_boundary(b, c.boundary.eval_samples, derive_seed(c.seed, "boundary-eval"));
    report.bp1 = bp1(samples, truth, truth_peak, report.gamma_frac, report.epsilon_frac);
    if (flow_field) {
      report.bp2 = bp2(samples, c.grid, *flow_field, truth_field, report.gamma_frac, report.epsilon_frac);
    }
    report.dispersion = dispersion(samples);
  }
  write_output(out, report.to_json() + "\n");
  return kExitOk;
}

int run_pipeline(const Overrides& o) {
  const ExperimentConfig c = build_config(o);
  const RunArtifacts art = run_experiment(c);
  std::cout << "report: " << art.report->string() << '\n';
  return kExitOk;
}

int run_plot(const std::string& data_path, const std::string& flow_path, const std::string& boundary_path,
             const std::string& out) {
  const Batch data = load_dataset(data_path);
  std::optional<Batch> flow;
  if (!flow_path.empty()) flow = load_dataset(flow_path);
  const Batch boundary = boundary_path.empty() ? Batch(0, 2) : load_dataset(boundary_path);
  write_output(out, scatter_svg(data, flow ? &*flow : nullptr, boundary));
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::numeric:
    case ErrorKind::inversion:
      return kExitNumeric;
    case ErrorKind::io:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-of-support generator: train, score and evaluate"};
  app.require_subcommand(1);

  Overrides gen_o, flow_o, bnd_o, score_o, eval_o, run_o;
  std::string gen_out, flow_out, flow_hist, bnd_flow, bnd_out, bnd_hist;
  std::string score_flow, score_input, score_boundary, score_out;
  std::optional<double> score_eps;
  std::string eval_flow, eval_boundary, eval_out;
  std::string plot_data, plot_flow, plot_boundary, plot_out;

  auto* gen = app.add_subcommand("gen-data", "Draw a synthetic dataset from a Gaussian mixture");
  add_overrides(gen, gen_o);
  gen->add_option("--out", gen_out, "Output CSV (default stdout)");

  auto* tf = app.add_subcommand("train-flow", "Train a residual flow on a dataset");
  add_overrides(tf, flow_o);
  tf->add_option("--out", flow_out, "Flow checkpoint path")->required();
  tf->add_option("--history", flow_hist, "Per-epoch NLL CSV");

  auto* tb = app.add_subcommand("train-boundary", "Train the boundary generator");
  add_overrides(tb, bnd_o);
  tb->add_option("--flow", bnd_flow, "Flow checkpoint used as the density (default: the mixture)");
  tb->add_option("--out", bnd_out, "Boundary checkpoint path")->required();
  tb->add_option("--history", bnd_hist, "Loss history CSV");

  auto* sc = app.add_subcommand("score", "Classify points, or compute the OoD loss with --boundary");
  add_overrides(sc, score_o);
  sc->add_option("--flow", score_flow, "Flow checkpoint used as the density");
  sc->add_option("--input", score_input, "Points to score (CSV)")->required();
  sc->add_option("--epsilon", score_eps, "Absolute density threshold (overrides --epsilon-frac)");
  sc->add_option("--boundary", score_boundary, "Boundary checkpoint: switch to OoD loss scoring");
  sc->add_option("--out", score_out, "Output path (default stdout)");

  auto* ev = app.add_subcommand("eval", "Grid metrics and boundary precision against the true mixture");
  add_overrides(ev, eval_o);
  ev->add_option("--flow", eval_flow, "Flow checkpoint");
  ev->add_option("--boundary", eval_boundary, "Boundary checkpoint");
  ev->add_option("--out", eval_out, "Report JSON (default stdout)");

  auto* rn = app.add_subcommand("run", "Full pipeline: data, flow, boundary, evaluation, report");
  add_overrides(rn, run_o);
  rn->get_option("--seed")->required();

  auto* pl = app.add_subcommand("plot", "SVG scatter of data, flow and boundary samples");
  pl->add_option("--data", plot_data, "Data CSV")->required();
  pl->add_option("--flow-samples", plot_flow, "Flow samples CSV");
  pl->add_option("--boundary-samples", plot_boundary, "Boundary samples CSV");
  pl->add_option("--out", plot_out, "Output SVG (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) return run_gen_data(gen_o, gen_out);
    if (*tf) return run_train_flow(flow_o, flow_out, flow_hist);
    if (*tb) return run_train_boundary(bnd_o, bnd_flow, bnd_out, bnd_hist);
    if (*sc) return run_score(score_o, score_flow, score_input, score_eps, score_boundary, score_out);
    if (*ev) return run_eval(eval_o, eval_flow, eval_boundary, eval_out);
    if (*rn) return run_pipeline(run_o);
    if (*pl) return run_plot(plot_data, plot_flow, plot_boundary, plot_out);
  } catch (const Error& e) {
    std::cerr << "bdsg: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "bdsg: error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
