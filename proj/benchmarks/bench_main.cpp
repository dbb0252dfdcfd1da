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

// Microbenchmarks for the hot paths of training and evaluation.

#include <bdsg/boundary.hpp>
#include <bdsg/evaluation.hpp>
#include <bdsg/flow.hpp>
#include <bdsg/mixture.hpp>
#include <bdsg/mlp.hpp>
#include <bdsg/random.hpp>
#include <bdsg/spectral.hpp>

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace bdsg;

Batch normal_batch(Eigen::Index n, int d, std::uint64_t seed) {
  Rng rng(seed);
  return standard_normal(n, d, rng);
}

GaussianMixture bimodal() {
  return GaussianMixture({{0.5, Point(Eigen::Vector2d(-5, 0)), Matrix::Identity(2, 2)},
                          {0.5, Point(Eigen::Vector2d(5, 0)), Matrix::Identity(2, 2)}});
}

FlowModel small_flow() {
  FlowOptions fo;
  fo.blocks = 8;
  fo.hidden = {32, 32};
  fo.seed = 3;
  return FlowModel::build(fo);
}

void BM_MlpForward(benchmark::State& state) {
  const Mlp net = Mlp::build({2, 32, 32, 2}, Activation::tanh, 1);
  const Batch x = normal_batch(state.range(0), 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(256)->Arg(4096);

void BM_MlpTapeGradient(benchmark::State& state) {
  const Mlp net = Mlp::build({2, 32, 32, 2}, Activation::tanh, 1);
  const Batch x = normal_batch(state.range(0), 2, 2);
  for (auto _ : state) {
    ad::Tape tape;
    const MlpVars vars = bind(tape, net, true);
    const ad::Var out = ad::sum(ad::square(forward(vars, tape.constant(x))));
    benchmark::DoNotOptimize(collect_gradients(tape.gradient(out), vars));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpTapeGradient)->Arg(256);

void BM_FlowLogDensity(benchmark::State& state) {
  const FlowModel flow = small_flow();
  const Batch x = normal_batch(state.range(0), 2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(flow.log_density(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FlowLogDensity)->Arg(256)->Arg(4096);

void BM_FlowSample(benchmark::State& state) {
  const FlowModel flow = small_flow();
  const Batch z = normal_batch(state.range(0), 2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(flow.forward(z).x);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FlowSample)->Arg(256);

void BM_SpectralNormalize(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  Matrix w(32, 32);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_normalize(w, 0.9, 50, 11));
}
BENCHMARK(BM_SpectralNormalize);

void BM_BdsgLossGradient(benchmark::State& state) {
  const GaussianMixture density = bimodal();
  const Batch data = normal_batch(1024, 2, 7);
  const Batch z = normal_batch(state.range(0), 2, 8);
  const Mlp net = Mlp::build({2, 8, 8, 8, 2}, Activation::tanh, 9);
  BdsgHyperparams hp;
  hp.batch_size = static_cast<int>(state.range(0));
  for (auto _ : state) {
    ad::Tape tape;
    const MlpVars vars = bind(tape, net, true);
    const LossTerms terms = bdsg_loss(tape, density, vars, z, data, hp);
    benchmark::DoNotOptimize(collect_gradients(tape.gradient(terms.total), vars));
  }
}
BENCHMARK(BM_BdsgLossGradient)->Arg(64)->Arg(256);

void BM_GridEvaluateMixture(benchmark::State& state) {
  const GaussianMixture density = bimodal();
  const GridSpec grid = GridSpec::square(2, -10.0, 10.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_on_grid(density, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_GridEvaluateMixture)->Arg(200);

void BM_Auroc(benchmark::State& state) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u;
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  std::vector<int> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = u(rng);
    labels[i] = i % 3 == 0 ? 1 : 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(scores, labels));
    benchmark::DoNotOptimize(auprc(scores, labels));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
