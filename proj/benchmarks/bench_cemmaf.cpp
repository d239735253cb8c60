// Copyright 2026 The cemmaf Authors.
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

#include <benchmark/benchmark.h>

#include <random>

#include "cemmaf/fixture.hpp"
#include "cemmaf/graph.hpp"
#include "cemmaf/pn_solver.hpp"
#include "cemmaf/pp_solver.hpp"
#include "cemmaf/segmentation.hpp"

namespace cemmaf {
namespace {

const FixtureModel& model() {
  static const FixtureModel m = train_fixture_model(FixtureSpec{}, 7);
  return m;
}

Image sample_image() {
  std::mt19937_64 rng(11);
  return generate_blobs(FixtureSpec{}, 1, rng).front().image;
}

std::vector<double> normal_values(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

// Dense layer pair of width n, reverse pass through every weight.
void BM_GraphGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  GraphBuilder b;
  const NodeId x = b.input({n});
  const NodeId w1 = b.input({n, n});
  const NodeId w2 = b.input({n, n});
  const NodeId loss = b.sum(b.square(b.matmul(w2, b.relu(b.matmul(w1, x)))));
  const Graph graph = b.build();
  const InputMap inputs = {{x, Tensor::vector(normal_values(n, rng))},
                           {w1, Tensor({n, n}, normal_values(n * n, rng))},
                           {w2, Tensor({n, n}, normal_values(n * n, rng))}};
  for (auto _ : state) benchmark::DoNotOptimize(backward_grad(graph, inputs, loss));
}
BENCHMARK(BM_GraphGradient)->Arg(8)->Arg(32)->Arg(128);

void BM_ClassifierPullback(benchmark::State& state) {
  const ModelBundle& bundle = model().bundle;
  const Image x0 = sample_image();
  const std::vector<double> cot(bundle.num_classes(), 1.0);
  for (auto _ : state) {
    const auto pass = bundle.classifier.forward_pass(x0.values());
    benchmark::DoNotOptimize(bundle.classifier.pullback(pass, cot));
  }
}
BENCHMARK(BM_ClassifierPullback);

void BM_PnSolve(benchmark::State& state) {
  const ModelBundle& bundle = model().bundle;
  const Image x0 = sample_image();
  PnHyperParams hp;
  hp.rounds = 1;
  hp.iters = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_pn(bundle, x0, hp));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PnSolve)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PpSolve(benchmark::State& state) {
  const ModelBundle& bundle = model().bundle;
  const Image x0 = sample_image();
  const SuperpixelPartition partition =
      grid_segment(x0.shape().height, x0.shape().width, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_pp(bundle, x0, partition, PpHyperParams{}));
  state.SetItemsProcessed(state.iterations() * PpHyperParams{}.rounds * PpHyperParams{}.iters);
}
BENCHMARK(BM_PpSolve)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cemmaf

BENCHMARK_MAIN();
