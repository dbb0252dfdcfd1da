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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <bdsg/error.hpp>
#include <bdsg/flow.hpp>
#include <bdsg/mixture.hpp>
#include <bdsg/random.hpp>
#include <bdsg/spectral.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace bdsg;
using bdsg::testing::random_matrix;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

GaussianComponent component(double w, double mx, double my, double var) {
  return {w, Point(Eigen::Vector2d(mx, my)), Eigen::Matrix2d::Identity() * var};
}

GaussianMixture bimodal() { return GaussianMixture({component(0.5, 5, 0, 1), component(0.5, -5, 0, 1)}); }

// Sub-network computing f(u) = a u exactly.
Mlp scaled_identity(double a, int d = 2) {
  return Mlp({d, d}, Activation::identity, {DenseLayer{Matrix::Identity(d, d) * a, Matrix::Zero(1, d)}});
}

Mlp zero_net(int d = 2) {
  return Mlp({d, 4, d}, Activation::tanh,
             {DenseLayer{Matrix::Zero(4, d), Matrix::Zero(1, 4)}, DenseLayer{Matrix::Zero(d, 4), Matrix::Zero(1, d)}});
}

double quadrature(const DensityModel& model, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  Batch pts(static_cast<Eigen::Index>(n) * n, 2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      pts(static_cast<Eigen::Index>(i) * n + j, 0) = lo + (i + 0.5) * h;
      pts(static_cast<Eigen::Index>(i) * n + j, 1) = lo + (j + 0.5) * h;
    }
  }
  return model.log_density(pts).array().exp().sum() * h * h;
}

// Trained once and shared by the training-dependent cases.
const FlowTrainResult& trained_standard_normal() {
  static const FlowTrainResult result = [] {
    Rng rng(derive_seed(11, "data"));
    const Batch data = standard_normal(2048, 2, rng);
    FlowOptions options;
    options.blocks = 4;
    options.hidden = {16, 16};
    options.activation = Activation::elu;
    options.seed = 5;
    FlowTrainOptions train;
    train.epochs = 15;
    train.batch_size = 128;
    train.adam.learning_rate = 3e-3;
    train.seed = 6;
    return train_flow(FlowModel::build(options), data, train);
  }();
  return result;
}

}  // namespace

TEST_SUITE("gaussian mixture") {
  TEST_CASE("standard 2D normal at the origin and at (1, 0)") {
    const GaussianMixture m = GaussianMixture::standard_normal(2);
    CHECK(m.log_density(Point(Eigen::Vector2d(0, 0))) == doctest::Approx(-1.837877).epsilon(1e-6));
    CHECK(m.log_density(Point(Eigen::Vector2d(1, 0))) == doctest::Approx(-2.337877).epsilon(1e-6));
  }

  TEST_CASE("equal-weight bimodal mixture at (5, 0) matches direct summation") {
    const double far = std::exp(-0.5 * 100.0) / (2 * std::numbers::pi);
    const double oracle = std::log(0.5 / (2 * std::numbers::pi) + 0.5 * far);
    const double got = bimodal().log_density(Point(Eigen::Vector2d(5, 0)));
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(got == doctest::Approx(-2.531024).epsilon(1e-6));
  }

  TEST_CASE("general covariance matches the explicit formula") {
    Eigen::Matrix2d cov;
    cov << 2.0, 0.6, 0.6, 0.5;
    const GaussianMixture m({{1.0, Point(Eigen::Vector2d(1, -1)), cov}});
    const Eigen::Vector2d x(0.3, 0.2);
    const Eigen::Vector2d r = x - Eigen::Vector2d(1, -1);
    const double oracle = -kLog2Pi - 0.5 * std::log(cov.determinant()) - 0.5 * r.dot(cov.inverse() * r);
    CHECK(m.log_density(Point(x)) == doctest::Approx(oracle).epsilon(1e-12));
  }

  TEST_CASE("far points stay finite and clamp to a positive density") {
    const double lp = bimodal().log_density(Point(Eigen::Vector2d(1e3, 1e3)));
    CHECK(std::isfinite(lp));
    CHECK(lp < kLogDensityFloor);
    CHECK(clamped_density(lp) > 0.0);
    CHECK(clamped_density(lp) == std::exp(kLogDensityFloor));
  }

  TEST_CASE("construction rejects bad weights and covariances") {
    CHECK_THROWS_AS(GaussianMixture({component(0.5, 0, 0, 1)}), ConfigError);
    CHECK_THROWS_AS(GaussianMixture({component(0.6, 0, 0, 1), component(0.6, 1, 0, 1)}), ConfigError);
    CHECK_THROWS_AS(GaussianMixture({component(1.0, 0, 0, -1)}), ConfigError);
    Eigen::Matrix2d asym;
    asym << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(GaussianMixture({{1.0, Point(Eigen::Vector2d(0, 0)), asym}}), ConfigError);
    CHECK_THROWS_AS(GaussianMixture({}), ConfigError);
  }

  TEST_CASE("json round-trip preserves densities") {
    const GaussianMixture m = bimodal();
    const GaussianMixture back = GaussianMixture::from_json(m.to_json());
    const Point x(Eigen::Vector2d(0.7, -2.0));
    CHECK(back.log_density(x) == m.log_density(x));
    CHECK_THROWS_AS(GaussianMixture::from_json("{\"components\": 3}"), Error);
    CHECK_THROWS_AS(GaussianMixture::from_json("not json"), Error);
  }

  TEST_CASE("dimension mismatch is a shape error") {
    CHECK_THROWS_AS(bimodal().log_density(Batch(Batch::Zero(2, 3))), ShapeError);
  }

  TEST_CASE("sampling is seeded and labels follow the weights") {
    Rng a(3), b(3);
    std::vector<int> labels;
    const Batch s = bimodal().sample(4000, a, labels);
    CHECK(s == bimodal().sample(4000, b));
    const auto ones = std::count(labels.begin(), labels.end(), 1);
    CHECK(std::abs(static_cast<double>(ones) / 4000.0 - 0.5) < 0.05);
    for (Eigen::Index i = 0; i < s.rows(); ++i) CHECK((s(i, 0) > 0) == (labels[static_cast<std::size_t>(i)] == 0));
  }

  TEST_CASE("tape log-density matches values and finite-difference gradients") {
    const GaussianMixture m = bimodal();
    std::mt19937_64 rng(41);
    const Matrix x = random_matrix(6, 2, rng, 3.0);
    ad::Tape tape;
    CHECK((m.log_density(tape, tape.constant(x)).value() - Matrix(m.log_density(x))).cwiseAbs().maxCoeff() < 1e-12);
    const double err = bdsg::testing::gradient_check(
        [&](ad::Tape& t, ad::Var v) { return ad::sum(m.log_density(t, v)); }, x);
    CHECK(err < 1e-6);
  }
}

TEST_SUITE("residual flow") {
  TEST_CASE("zero sub-networks give the identity with zero log-det") {
    const FlowModel flow(2, {ResidualBlock{zero_net(), 0.9}, ResidualBlock{zero_net(), 0.9}});
    const Point z(Eigen::Vector2d(0.4, -1.3));
    const auto fw = flow.forward(z);
    CHECK(fw.x == z);
    CHECK(fw.log_det == 0.0);
    CHECK(flow.inverse(z) == z);
    CHECK(flow.log_density(Point(Eigen::Vector2d(0, 0))) == doctest::Approx(-1.837877).epsilon(1e-6));
  }

  TEST_CASE("f(u) = 0.5u block scales by 1.5 with log-det log 2.25") {
    const FlowModel flow(2, {ResidualBlock{scaled_identity(0.5), 0.5}});
    const auto fw = flow.forward(Point(Eigen::Vector2d(1.0, -2.0)));
    CHECK(fw.x(0) == doctest::Approx(1.5));
    CHECK(fw.x(1) == doctest::Approx(-3.0));
    CHECK(fw.log_det == doctest::Approx(0.810930).epsilon(1e-6));
    CHECK(fw.log_det == doctest::Approx(std::log(2.25)).epsilon(1e-14));
  }

  TEST_CASE("inverse of f(u) = 0.5u at (3, 0) is (2, 0)") {
    const FlowModel flow(2, {ResidualBlock{scaled_identity(0.5), 0.5}});
    const Point z = flow.inverse(Point(Eigen::Vector2d(3.0, 0.0)));
    CHECK(std::abs(z(0) - 2.0) < 1e-7);
    CHECK(std::abs(z(1)) < 1e-12);
  }

  TEST_CASE("log-density at the origin composes the two oracles") {
    const FlowModel flow(2, {ResidualBlock{scaled_identity(0.5), 0.5}});
    CHECK(flow.log_density(Point(Eigen::Vector2d(0, 0))) ==
          doctest::Approx(-1.837877 - 0.810930).epsilon(1e-6));
  }

  TEST_CASE("fixed-point residuals shrink geometrically at rate at most L") {
    FlowOptions options;
    options.blocks = 1;
    options.seed = 8;
    const FlowModel flow = FlowModel::build(options);
    const Mlp& net = flow.blocks()[0].net;
    std::vector<double> residuals;
    InverseOptions inv;
    inv.tol = 1e-14;
    (void)invert_block(net, Point(Eigen::Vector2d(1.2, -0.7)), inv, &residuals);
    REQUIRE(residuals.size() > 3);
    const double lip = lipschitz_upper_bound(net);
    CHECK(lip < 1.0);
    for (std::size_t k = 2; k < residuals.size(); ++k) {
      if (residuals[k - 1] < 1e-13) break;
      CHECK(residuals[k] <= residuals[k - 1] * lip * (1 + 1e-9) + 1e-15);
    }
  }

  TEST_CASE("an expansive block fails to invert with the residual attached") {
    const FlowModel flow(2, {ResidualBlock{scaled_identity(-2.0), 0.5}});
    try {
      (void)flow.inverse(Batch(Batch::Constant(3, 2, 1.0)));
      FAIL("expected InversionError");
    } catch (const InversionError& e) {
      CHECK(e.residual() > 0.0);
      REQUIRE(e.sample_index().has_value());
      CHECK(*e.sample_index() == 0);
    }
    CHECK_THROWS_AS(flow.log_density(Point(Eigen::Vector2d(1, 1))), InversionError);
  }

  TEST_CASE("sub-networks must map R^d to itself") {
    const Mlp wrong = Mlp::build({2, 4, 3}, Activation::elu, 1);
    CHECK_THROWS_AS(FlowModel(2, {ResidualBlock{wrong, 0.9}}), ConfigError);
  }

  TEST_CASE("built flows respect the per-block Lipschitz bound") {
    FlowOptions options;
    options.seed = 12;
    const FlowModel flow = FlowModel::build(options);
    CHECK(flow.blocks().size() == 8);
    for (const auto& b : flow.blocks()) CHECK(lipschitz_upper_bound(b.net) < 1.0);
  }

  TEST_CASE("jvp log-det matches a finite-difference Jacobian determinant") {
    FlowOptions options;
    options.blocks = 1;
    options.activation = Activation::softplus;
    options.seed = 21;
    const FlowModel flow = FlowModel::build(options);
    const Mlp& net = flow.blocks()[0].net;
    std::mt19937_64 rng(22);
    const Batch u = random_matrix(20, 2, rng, 2.0);
    const Vector exact = block_log_det(net, u);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const Point x = u.row(i).transpose();
      Eigen::Matrix2d jac;
      const double h = 1e-6;
      for (int k = 0; k < 2; ++k) {
        Point up = x, down = x;
        up(k) += h;
        down(k) -= h;
        jac.col(k) = (up + net.forward(up) - down - net.forward(down)) / (2 * h);
      }
      CHECK(std::abs(std::log(std::abs(jac.determinant())) - exact(i)) < 1e-5);
    }
  }

  TEST_CASE("random flows are normalized densities") {
    FlowOptions options;
    options.blocks = 4;
    options.seed = 31;
    const FlowModel flow = FlowModel::build(options);
    CHECK(std::abs(quadrature(flow, -8.0, 8.0, 400) - 1.0) < 0.02);
  }

  TEST_CASE("tape log-density gradients match finite differences in x") {
    FlowOptions options;
    options.blocks = 3;
    options.seed = 33;
    const FlowModel flow = FlowModel::build(options);
    std::mt19937_64 rng(34);
    const Matrix x = random_matrix(4, 2, rng);
    ad::Tape tape;
    CHECK((flow.log_density(tape, tape.constant(x)).value() - Matrix(flow.log_density(x))).cwiseAbs().maxCoeff() <
          1e-9);
    const double err = bdsg::testing::gradient_check(
        [&](ad::Tape& t, ad::Var v) { return ad::sum(flow.log_density(t, v)); }, x);
    CHECK(err < 1e-4);
  }

  TEST_CASE("parameter gradients through the inverse match finite differences") {
    FlowOptions options;
    options.blocks = 2;
    options.hidden = {6};
    options.seed = 35;
    FlowModel flow = FlowModel::build(options);
    flow.set_inverse_options({1e-13, 2000});
    std::mt19937_64 rng(36);
    const Matrix x = random_matrix(5, 2, rng);
    ad::Tape tape;
    std::vector<MlpVars> vars;
    for (const auto& b : flow.blocks()) vars.push_back(bind(tape, b.net, true));
    const ad::Var loss = ad::mean(flow_log_density(tape, flow, tape.constant(x), vars));
    const ad::Gradients grads = tape.gradient(loss);
    for (std::size_t b = 0; b < flow.blocks().size(); ++b) {
      const std::vector<Matrix> g = collect_gradients(grads, vars[b]);
      auto params = flow.blocks()[b].net.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        for (Eigen::Index k = 0; k < params[p]->size(); ++k) {
          double& slot = params[p]->data()[k];
          const double saved = slot;
          slot = saved + 1e-6;
          const double up = flow.log_density(x).mean();
          slot = saved - 1e-6;
          const double down = flow.log_density(x).mean();
          slot = saved;
          CHECK(bdsg::testing::relative_error(g[p].data()[k], (up - down) / 2e-6) < 1e-4);
        }
      }
    }
  }

  TEST_CASE("checkpoint round-trips bit-exactly") {
    FlowOptions options;
    options.seed = 40;
    const FlowModel flow = FlowModel::build(options);
    std::stringstream s;
    write_flow(s, flow);
    const FlowModel back = read_flow(s);
    CHECK(back == flow);
    const auto dir = bdsg::testing::scratch_dir("flow-ckpt");
    save_flow(dir / "f.ckpt", flow);
    CHECK(load_flow(dir / "f.ckpt") == flow);
    std::stringstream bad("bdsg-flow 9\n");
    CHECK_THROWS_AS(read_flow(bad), ParseError);
  }
}

TEST_SUITE("flow training") {
  TEST_CASE("zero epochs return the model unchanged") {
    FlowOptions options;
    options.seed = 50;
    const FlowModel flow = FlowModel::build(options);
    Rng rng(1);
    FlowTrainOptions train;
    train.epochs = 0;
    train.batch_size = 8;
    const FlowTrainResult r = train_flow(flow, standard_normal(64, 2, rng), train);
    CHECK(r.flow == flow);
    CHECK(r.history.empty());
  }

  TEST_CASE("batch size outside [1, M] is rejected") {
    Rng rng(1);
    FlowTrainOptions train;
    train.batch_size = 65;
    CHECK_THROWS_AS(train_flow(FlowModel::build({}), standard_normal(64, 2, rng), train), ConfigError);
  }

  TEST_CASE("standard-normal data: origin density near -log(2 pi)") {
    const FlowTrainResult& r = trained_standard_normal();
    REQUIRE_FALSE(r.failure.has_value());
    CHECK(std::abs(r.flow.log_density(Point(Eigen::Vector2d(0, 0))) + kLog2Pi) < 0.15);
  }

  TEST_CASE("training NLL approaches the generating entropy") {
    const FlowTrainResult& r = trained_standard_normal();
    const double entropy = 0.5 * 2 * std::log(2 * std::numbers::pi * std::numbers::e);
    CHECK(std::abs(r.history.back() - entropy) < 0.2);
  }

  TEST_CASE("loss history is non-increasing under a moving average") {
    const FlowTrainResult& r = trained_standard_normal();
    const std::size_t w = std::min<std::size_t>(20, r.history.size() / 2);
    REQUIRE(w >= 1);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + w <= r.history.size(); ++k) {
      double avg = 0.0;
      for (std::size_t j = k; j < k + w; ++j) avg += r.history[j];
      avg /= static_cast<double>(w);
      CHECK(avg <= prev + 1e-2);
      prev = avg;
    }
  }

  TEST_CASE("trained flow round-trips 1000 random latents") {
    const FlowModel& flow = trained_standard_normal().flow;
    Rng rng(60);
    const Batch z = standard_normal(1000, 2, rng);
    const Batch back = flow.inverse(flow.forward(z).x);
    CHECK((back - z).cwiseAbs().maxCoeff() < 1e-5);
    for (const auto& b : flow.blocks()) CHECK(lipschitz_upper_bound(b.net) < 1.0);
  }

  TEST_CASE("trained flow integrates to one") {
    CHECK(std::abs(quadrature(trained_standard_normal().flow, -8.0, 8.0, 400) - 1.0) < 0.02);
  }

  TEST_CASE("sampled negative log-density averages to the quadrature entropy") {
    const FlowModel& flow = trained_standard_normal().flow;
    Rng rng(61);
    const auto fw = flow.forward(standard_normal(4000, 2, rng));
    const double mc = -flow.log_density(fw.x).mean();
    // Quadrature entropy on the same box.
    const int n = 300;
    const double lo = -8.0, h = 16.0 / n;
    Batch pts(n * n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) pts.row(i * n + j) << lo + (i + 0.5) * h, lo + (j + 0.5) * h;
    const Vector lp = flow.log_density(pts);
    const double quad = -(lp.array().exp() * lp.array()).sum() * h * h;
    CHECK(std::abs(mc - quad) < 0.05);
  }

  TEST_CASE("same seeds give bit-identical training") {
    Rng r1(70), r2(70);
    FlowOptions options;
    options.blocks = 2;
    options.hidden = {8};
    options.seed = 71;
    FlowTrainOptions train;
    train.epochs = 2;
    train.batch_size = 32;
    train.seed = 72;
    const auto a = train_flow(FlowModel::build(options), standard_normal(128, 2, r1), train);
    const auto b = train_flow(FlowModel::build(options), standard_normal(128, 2, r2), train);
    CHECK(a.flow == b.flow);
    CHECK(a.history == b.history);
  }
}
