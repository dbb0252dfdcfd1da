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

#include <bdsg/anomaly.hpp>
#include <bdsg/checkpoint.hpp>
#include <bdsg/dataset.hpp>
#include <bdsg/error.hpp>
#include <bdsg/experiment.hpp>
#include <bdsg/random.hpp>

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

namespace bdsg {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

template <typename T>
T field(const Json& obj, const char* key, const T& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

const Json& section(const Json& root, const char* key) {
  static const Json empty = Json::object();
  if (!root.contains(key)) return empty;
  if (!root.at(key).is_object()) throw ConfigError(std::string(key) + " must be an object");
  return root.at(key);
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

Json loss_json(const LossBreakdown& b) {
  return Json{{"total", b.total}, {"l0", b.l0}, {"l1", b.l1}, {"l2", b.l2}};
}

std::vector<double> as_vector(const Point& p) { return {p.data(), p.data() + p.size()}; }

Point as_point(const std::vector<double>& v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p(static_cast<Eigen::Index>(i)) = v[i];
  return p;
}

// Uniform draws inside the grid box whose truth density is below the
// epsilon threshold. Stops after a bounded number of attempts.
Batch low_density_points(const DensityModel& truth, double threshold, const GridSpec& grid, int n, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> kept;
  const long max_attempts = 1000L * n;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(kept.size()) < n; ++attempt) {
    Point x(grid.dim());
    for (int k = 0; k < grid.dim(); ++k) x(k) = grid.lower(k) + (grid.upper(k) - grid.lower(k)) * unit(rng);
    if (std::exp(truth.log_density(x)) < threshold) kept.push_back(std::move(x));
  }
  Batch out(static_cast<Eigen::Index>(kept.size()), grid.dim());
  for (std::size_t i = 0; i < kept.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
  return out;
}

}  // namespace

std::string to_string(Backend backend) { return backend == Backend::cfs ? "cfs" : "flow"; }

Backend parse_backend(const std::string& name) {
  if (name == "cfs") return Backend::cfs;
  if (name == "flow") return Backend::flow;
  throw ConfigError("unknown backend '" + name + "' (expected cfs or flow)");
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const fs::path& base_dir) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig c;
  c.seed = field<std::uint64_t>(root, "seed", 0, "config");
  c.backend = parse_backend(field<std::string>(root, "backend", "cfs", "config"));
  c.reference_flow = field<bool>(root, "reference_flow", false, "config");
  c.output_dir = resolve(field<std::string>(root, "output_dir", "bdsg-run", "config"), base_dir);

  const Json& data = section(root, "data");
  c.data.samples = field<int>(data, "samples", 1024, "data");
  const int sources = static_cast<int>(data.contains("mixture")) + static_cast<int>(data.contains("mixture_path")) +
                      static_cast<int>(data.contains("csv"));
  if (sources != 1) {
    throw ConfigError("data needs exactly one of mixture, mixture_path or csv");
  }
  if (data.contains("mixture")) {
    c.data.mixture = GaussianMixture::from_json(data.at("mixture").dump());
  } else if (data.contains("mixture_path")) {
    c.data.mixture = GaussianMixture::load(resolve(field<std::string>(data, "mixture_path", "", "data"), base_dir));
  } else {
    const fs::path csv = resolve(field<std::string>(data, "csv", "", "data"), base_dir);
    if (!fs::exists(csv)) throw IoError("dataset not found: " + csv.string());
    c.data.csv_path = csv;
  }

  const Json& flow = section(root, "flow");
  c.flow.model.blocks = field<int>(flow, "blocks", c.flow.model.blocks, "flow");
  c.flow.model.hidden = field<std::vector<int>>(flow, "hidden", c.flow.model.hidden, "flow");
  c.flow.model.activation = parse_activation(field<std::string>(flow, "activation", bdsg::to_string(c.flow.model.activation), "flow"));
  c.flow.model.lipschitz = field<double>(flow, "lipschitz", c.flow.model.lipschitz, "flow");
  c.flow.train.epochs = field<int>(flow, "epochs", c.flow.train.epochs, "flow");
  c.flow.train.batch_size = field<int>(flow, "batch_size", c.flow.train.batch_size, "flow");
  c.flow.train.adam.learning_rate = field<double>(flow, "learning_rate", c.flow.train.adam.learning_rate, "flow");
  c.flow.train.final_lr_fraction =
      field<double>(flow, "final_lr_fraction", c.flow.train.final_lr_fraction, "flow");
  c.flow.train.power_iters_per_step =
      field<int>(flow, "power_iters_per_step", c.flow.train.power_iters_per_step, "flow");
  c.flow.train.power_iters_final = field<int>(flow, "power_iters_final", c.flow.train.power_iters_final, "flow");
  c.flow.inverse.tol = field<double>(flow, "inverse_tol", c.flow.inverse.tol, "flow");
  c.flow.inverse.max_iter = field<int>(flow, "inverse_max_iter", c.flow.inverse.max_iter, "flow");

  const Json& b = section(root, "boundary");
  c.boundary.widths = field<std::vector<int>>(b, "widths", c.boundary.widths, "boundary");
  c.boundary.activation = parse_activation(field<std::string>(b, "activation", "tanh", "boundary"));
  c.boundary.hp.lambda1 = field<double>(b, "lambda1", c.boundary.hp.lambda1, "boundary");
  c.boundary.hp.lambda2 = field<double>(b, "lambda2", c.boundary.hp.lambda2, "boundary");
  c.boundary.hp.batch_size = field<int>(b, "batch_size", c.boundary.hp.batch_size, "boundary");
  c.boundary.hp.epochs = field<int>(b, "epochs", c.boundary.hp.epochs, "boundary");
  c.boundary.hp.eps_div = field<double>(b, "eps_div", c.boundary.hp.eps_div, "boundary");
  c.boundary.hp.adam.learning_rate = field<double>(b, "learning_rate", c.boundary.hp.adam.learning_rate, "boundary");
  c.boundary.eval_samples = field<int>(b, "eval_samples", c.boundary.eval_samples, "boundary");

  const Json& g = section(root, "grid");
  if (!g.empty()) {
    c.grid.lower = as_point(field<std::vector<double>>(g, "lower", as_vector(c.grid.lower), "grid"));
    c.grid.upper = as_point(field<std::vector<double>>(g, "upper", as_vector(c.grid.upper), "grid"));
    c.grid.resolution = field<std::vector<int>>(g, "resolution", c.grid.resolution, "grid");
  }

  const Json& m = section(root, "metrics");
  c.metrics.epsilon_frac = field<double>(m, "epsilon_frac", c.metrics.epsilon_frac, "metrics");
  c.metrics.gamma_frac = field<double>(m, "gamma_frac", c.metrics.gamma_frac, "metrics");
  c.metrics.test_samples = field<int>(m, "test_samples", c.metrics.test_samples, "metrics");
  c.metrics.ood_shift_sd = field<double>(m, "ood_shift_sd", c.metrics.ood_shift_sd, "metrics");
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  return from_json(checkpoint::read_text_file(path), path.parent_path());
}

std::string ExperimentConfig::to_json() const {
  Json root;
  root["seed"] = seed;
  root["backend"] = to_string(backend);
  root["reference_flow"] = reference_flow;
  root["output_dir"] = output_dir.string();
  Json data;
  if (this->data.mixture) data["mixture"] = Json::parse(this->data.mixture->to_json());
  if (this->data.csv_path) data["csv"] = this->data.csv_path->string();
  data["samples"] = this->data.samples;
  root["data"] = data;
  root["flow"] = {{"blocks", flow.model.blocks},
                  {"hidden", flow.model.hidden},
                  {"activation", bdsg::to_string(flow.model.activation)},
                  {"lipschitz", flow.model.lipschitz},
                  {"epochs", flow.train.epochs},
                  {"batch_size", flow.train.batch_size},
                  {"learning_rate", flow.train.adam.learning_rate},
                  {"final_lr_fraction", flow.train.final_lr_fraction},
                  {"power_iters_per_step", flow.train.power_iters_per_step},
                  {"power_iters_final", flow.train.power_iters_final},
                  {"inverse_tol", flow.inverse.tol},
                  {"inverse_max_iter", flow.inverse.max_iter}};
  root["boundary"] = {{"widths", boundary.widths},
                      {"activation", bdsg::to_string(boundary.activation)},
                      {"lambda1", boundary.hp.lambda1},
                      {"lambda2", boundary.hp.lambda2},
                      {"batch_size", boundary.hp.batch_size},
                      {"epochs", boundary.hp.epochs},
                      {"eps_div", boundary.hp.eps_div},
                      {"learning_rate", boundary.hp.adam.learning_rate},
                      {"eval_samples", boundary.eval_samples}};
  root["grid"] = {{"lower", as_vector(grid.lower)}, {"upper", as_vector(grid.upper)}, {"resolution", grid.resolution}};
  root["metrics"] = {{"epsilon_frac", metrics.epsilon_frac},
                     {"gamma_frac", metrics.gamma_frac},
                     {"test_samples", metrics.test_samples},
                     {"ood_shift_sd", metrics.ood_shift_sd}};
  return root.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
  if (data.mixture.has_value() == data.csv_path.has_value()) {
    throw ConfigError("exactly one data source is required");
  }
  if (backend == Backend::cfs && !data.mixture) {
    throw ConfigError("the cfs backend needs a mixture; use the flow backend for CSV data");
  }
  if (data.mixture && data.samples < 1) throw ConfigError("data.samples must be at least 1");
  if (flow.model.blocks < 1) throw ConfigError("flow.blocks must be at least 1");
  if (flow.train.epochs < 0 || flow.train.batch_size < 1) throw ConfigError("flow epochs/batch_size invalid");
  if (!(flow.train.final_lr_fraction > 0.0 && flow.train.final_lr_fraction <= 1.0)) {
    throw ConfigError("flow.final_lr_fraction must lie in (0, 1]");
  }
  if (!(flow.model.lipschitz > 0.0 && flow.model.lipschitz < 1.0)) {
    throw ConfigError("flow.lipschitz must lie in (0, 1)");
  }
  if (boundary.widths.size() < 2) throw ConfigError("boundary.widths needs at least input and output widths");
  for (int w : boundary.widths) {
    if (w < 1) throw ConfigError("boundary widths must be positive");
  }
  if (boundary.eval_samples < 2) throw ConfigError("boundary.eval_samples must be at least 2");
  if (!(metrics.gamma_frac > 0.0 && metrics.gamma_frac < metrics.epsilon_frac)) {
    throw ConfigError("metrics need 0 < gamma_frac < epsilon_frac");
  }
  if (metrics.test_samples < 1) throw ConfigError("metrics.test_samples must be positive");
  grid.validate();
  if (data.mixture) {
    const int d = data.mixture->dim();
    if (boundary.widths.back() != d) throw ConfigError("boundary output width must equal the data dimension");
    if (grid.dim() != d) throw ConfigError("grid dimension must equal the data dimension");
    BdsgHyperparams hp = boundary.hp;
    hp.sample_size = data.samples;
    hp.validate();
  } else {
    BdsgHyperparams hp = boundary.hp;
    hp.sample_size = std::numeric_limits<int>::max();
    hp.validate();
  }
}

std::string config_hash(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(bytes));
  return buf;
}

std::string loss_history_csv(const std::vector<LossBreakdown>& history) {
  std::string out = "epoch,total,l0,l1,l2\n";
  for (const auto& row : history) {
    out += std::to_string(row.epoch) + ',' + format_number(row.total) + ',' + format_number(row.l0) + ',' +
           format_number(row.l1) + ',' + format_number(row.l2) + '\n';
  }
  return out;
}

std::string scatter_svg(const Batch& data, const Batch* flow_samples, const Batch& boundary) {
  const auto check = [](const Batch& b, const char* name) {
    if (b.rows() > 0 && b.cols() != 2) throw ConfigError(std::string("scatter plot needs 2-D ") + name);
  };
  check(data, "data");
  if (flow_samples != nullptr) check(*flow_samples, "flow samples");
  check(boundary, "boundary samples");

  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  const auto extend = [&](const Batch& b) {
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      lo_x = std::min(lo_x, b(i, 0));
      hi_x = std::max(hi_x, b(i, 0));
      lo_y = std::min(lo_y, b(i, 1));
      hi_y = std::max(hi_y, b(i, 1));
    }
  };
  extend(data);
  if (flow_samples != nullptr) extend(*flow_samples);
  extend(boundary);
  if (!std::isfinite(lo_x)) {
    lo_x = lo_y = -1.0;
    hi_x = hi_y = 1.0;
  }
  double span = std::max(hi_x - lo_x, hi_y - lo_y);
  if (!(span > 0.0)) span = 1.0;
  const double margin = 0.05 * span;
  lo_x -= margin;
  lo_y -= margin;
  hi_x += margin;
  hi_y += margin;
  // One scale for both axes keeps circles round and distances comparable.
  const double scale = 600.0 / std::max(hi_x - lo_x, hi_y - lo_y);
  const double width = (hi_x - lo_x) * scale;
  const double height = (hi_y - lo_y) * scale;

  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.2f\" height=\"%.2f\" viewBox=\"0 0 %.2f %.2f\">\n",
                width, height, width, height);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto points = [&](const Batch& b, const char* color, const char* label) {
    out += std::string("<g class=\"") + label + "\">\n";
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"2\" fill=\"%s\"/>\n",
                    (b(i, 0) - lo_x) * scale, (hi_y - b(i, 1)) * scale, color);
      out += buf;
    }
    out += "</g>\n";
  };
  points(data, "red", "data");
  if (flow_samples != nullptr) points(*flow_samples, "green", "flow");
  points(boundary, "blue", "boundary");
  out += "</svg>\n";
  return out;
}

void emit_scatter(const Batch& data, const Batch* flow_samples, const Batch& boundary, const fs::path& path) {
  checkpoint::write_text_file(path, scatter_svg(data, flow_samples, boundary));
}

RunArtifacts run_experiment(const ExperimentConfig& config) {
  config.validate();
  RunArtifacts art;
  art.output_dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(art.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + art.output_dir.string() + ": " + ec.message());

  const std::string config_bytes = config.to_json();
  art.config = art.output_dir / "config.json";
  art.manifest = art.output_dir / "manifest.json";
  checkpoint::write_text_file(art.config, config_bytes);

  Json artifacts = Json::object();
  const auto write_manifest = [&](const Error* error) {
    Json man;
    man["status"] = art.ok() ? "ok" : "failed";
    man["seed"] = config.seed;
    man["config"] = "config.json";
    man["config_hash"] = config_hash(config_bytes);
    man["backend"] = to_string(config.backend);
    if (art.ok()) {
      man["failed_stage"] = nullptr;
    } else {
      man["failed_stage"] = art.failed_stage;
      man["error"] = art.failure_message;
      man["error_kind"] = error != nullptr ? bdsg::to_string(error->kind()) : "unknown";
    }
    man["artifacts"] = artifacts;
    checkpoint::write_text_file(art.manifest, man.dump(2) + "\n");
  };
  const auto record = [&](const char* name, const fs::path& path) { artifacts[name] = path.filename().string(); };

  std::string stage;
  try {
    stage = "data";
    Batch data;
    if (config.data.mixture) {
      data = generate_synthetic(*config.data.mixture, config.data.samples, derive_seed(config.seed, "data")).points;
    } else {
      data = load_dataset(*config.data.csv_path);
    }
    art.data_csv = art.output_dir / "data.csv";
    write_csv(art.data_csv, data);
    record("data", art.data_csv);
    if (config.data.csv_path && config.boundary.widths.back() != data.cols()) {
      throw ConfigError("boundary output width must equal the data dimension");
    }
    if (config.data.csv_path && config.grid.dim() != data.cols()) {
      throw ConfigError("grid dimension must equal the data dimension");
    }

    std::optional<FlowModel> flow;
    std::optional<double> final_nll;
    if (config.backend == Backend::flow || config.reference_flow) {
      stage = "flow";
      FlowOptions fo = config.flow.model;
      fo.dim = static_cast<int>(data.cols());
      fo.seed = derive_seed(config.seed, "flow");
      FlowModel model = FlowModel::build(fo);
      model.set_inverse_options(config.flow.inverse);
      FlowTrainOptions to = config.flow.train;
      to.seed = derive_seed(config.seed, "flow-train");
      FlowTrainResult trained = train_flow(std::move(model), data, to);
      art.flow_checkpoint = art.output_dir / "flow.ckpt";
      save_flow(*art.flow_checkpoint, trained.flow);
      record("flow_checkpoint", *art.flow_checkpoint);
      std::string hist = "epoch,nll\n";
      for (std::size_t e = 0; e < trained.history.size(); ++e) {
        hist += std::to_string(e) + ',' + format_number(trained.history[e]) + '\n';
      }
      art.flow_history = art.output_dir / "flow_history.csv";
      checkpoint::write_text_file(*art.flow_history, hist);
      record("flow_history", *art.flow_history);
      if (trained.failure) throw NumericError("flow", *trained.failure);
      if (!trained.history.empty()) final_nll = trained.history.back();
      flow = std::move(trained.flow);
    }

    stage = "boundary";
    const DensityModel& density =
        config.backend == Backend::cfs ? static_cast<const DensityModel&>(*config.data.mixture) : *flow;
    BdsgHyperparams hp = config.boundary.hp;
    hp.sample_size = static_cast<int>(data.rows());
    hp.seed = derive_seed(config.seed, "boundary");
    BoundaryTrainResult trained =
        train_boundary(density, data, config.boundary.widths, hp, config.boundary.activation);
    art.boundary_checkpoint = art.output_dir / "boundary.ckpt";
    save_boundary(*art.boundary_checkpoint, trained.model);
    record("boundary_checkpoint", *art.boundary_checkpoint);
    art.loss_history = art.output_dir / "loss_history.csv";
    checkpoint::write_text_file(*art.loss_history, loss_history_csv(trained.model.history));
    record("loss_history", *art.loss_history);
    if (trained.failure) throw NumericError("boundary", *trained.failure);
    const BoundaryModel& boundary = trained.model;
    const Batch samples =
        sample_boundary(boundary, config.boundary.eval_samples, derive_seed(config.seed, "boundary-eval"));
    art.boundary_samples = art.output_dir / "boundary_samples.csv";
    write_csv(*art.boundary_samples, samples);
    record("boundary_samples", *art.boundary_samples);

    stage = "evaluate";
    Json report;
    report["backend"] = to_string(config.backend);
    report["seed"] = config.seed;
    report["data"] = {{"samples", data.rows()}, {"dim", data.cols()}};
    Rng loss_rng(derive_seed(config.seed, "loss-eval"));
    const Batch z_eval = standard_normal(hp.batch_size, boundary.latent_dim, loss_rng);
    report["loss"] = {
        {"final_epoch", boundary.history.empty() ? Json(nullptr) : loss_json(boundary.history.back())},
        {"evaluation", loss_json(bdsg_loss(density, boundary, z_eval, data, hp))}};
    report["flow"] = final_nll ? Json{{"final_nll", *final_nll}} : Json(nullptr);

    EvalReport eval;
    eval.epsilon_frac = config.metrics.epsilon_frac;
    eval.gamma_frac = config.metrics.gamma_frac;
    eval.dispersion = dispersion(samples);
    Json ood = nullptr;
    if (config.data.mixture) {
      const GaussianMixture& truth = *config.data.mixture;
      const double truth_peak = mixture_peak(truth);
      eval.bp1 = bp1(samples, truth, truth_peak, eval.gamma_frac, eval.epsilon_frac);
      if (flow) {
        GridField truth_field = evaluate_on_grid(truth, config.grid);
        truth_field.peak = truth_peak;
        const GridField flow_field = evaluate_on_grid(*flow, config.grid, &data);
        eval.grid = grid_metrics(truth_field, flow_field, eval.epsilon_frac);
        eval.bp2 = bp2(samples, config.grid, flow_field, truth_field, eval.gamma_frac, eval.epsilon_frac);
      }
      Rng test_rng(derive_seed(config.seed, "test-set"));
      const Batch normal = truth.sample(config.metrics.test_samples, test_rng);
      const Batch anomalies = low_density_points(truth, eval.epsilon_frac * truth_peak, config.grid,
                                                 config.metrics.test_samples, test_rng);
      if (anomalies.rows() > 0) {
        std::vector<double> scores;
        std::vector<int> labels;
        const Vector lp_normal = safe_log_density(density, normal);
        const Vector lp_anom = safe_log_density(density, anomalies);
        for (Eigen::Index i = 0; i < lp_normal.size(); ++i) {
          scores.push_back(-lp_normal(i));
          labels.push_back(0);
        }
        for (Eigen::Index i = 0; i < lp_anom.size(); ++i) {
          scores.push_back(-lp_anom(i));
          labels.push_back(1);
        }
        eval.auroc = auroc(scores, labels);
        eval.auprc = auprc(scores, labels);
      }
      // Held-out normal data versus the same points shifted far away.
      const Point sd = ((data.rowwise() - data.colwise().mean()).array().square().colwise().sum() /
                        static_cast<double>(std::max<Eigen::Index>(1, data.rows() - 1)))
                           .sqrt()
                           .transpose();
      const Batch shifted = normal.rowwise() + (config.metrics.ood_shift_sd * sd).transpose();
      const std::uint64_t ood_seed = derive_seed(config.seed, "ood");
      ood = {{"shift_sd", config.metrics.ood_shift_sd},
             {"heldout", loss_json(ood_score(boundary, density, normal, hp, ood_seed))},
             {"shifted", loss_json(ood_score(boundary, density, shifted, hp, ood_seed))}};
    }
    report["metrics"] = Json::parse(eval.to_json());
    report["ood"] = ood;

    stage = "report";
    art.report = art.output_dir / "report.json";
    checkpoint::write_text_file(*art.report, report.dump(2) + "\n");
    record("report", *art.report);
    if (data.cols() == 2) {
      std::optional<Batch> flow_samples;
      if (flow) {
        Rng flow_rng(derive_seed(config.seed, "flow-samples"));
        flow_samples = flow->sample(config.boundary.eval_samples, flow_rng);
      }
      art.scatter = art.output_dir / "scatter.svg";
      emit_scatter(data, flow_samples ? &*flow_samples : nullptr, samples, *art.scatter);
      record("scatter", *art.scatter);
    }
  } catch (const Error& e) {
    art.failed_stage = stage;
    art.failure_message = e.what();
    write_manifest(&e);
    throw;
  }
  write_manifest(nullptr);
  return art;
}

bool verify_manifest(const fs::path& output_dir) {
  const Json man = Json::parse(checkpoint::read_text_file(output_dir / "manifest.json"));
  const std::string bytes = checkpoint::read_text_file(output_dir / man.at("config").get<std::string>());
  return config_hash(bytes) == man.at("config_hash").get<std::string>();
}

}  // namespace bdsg
