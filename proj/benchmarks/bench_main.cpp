// Copyright 2026 The l2grade Authors. All Rights Reserved.
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

#include "l2grade/metrics.hpp"
#include "l2grade/nn.hpp"
#include "l2grade/rng.hpp"
#include "l2grade/stats.hpp"

namespace l2grade {
namespace {

void BM_DenseForward(benchmark::State& state) {
  RngStream rng(1);
  const auto layer = init_dense<float>(768, 768, Activation::rectifier, rng);
  Matrix x(static_cast<std::size_t>(state.range(0)), 768);
  for (float& v : x.values()) v = static_cast<float>(rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(dense_forward(x, layer));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenseForward)->Arg(1)->Arg(8)->Arg(64);

void BM_MeanPool(benchmark::State& state) {
  RngStream rng(2);
  Matrix frames(static_cast<std::size_t>(state.range(0)), 768);
  for (float& v : frames.values()) v = static_cast<float>(rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(mean_pool(frames));
}
BENCHMARK(BM_MeanPool)->Arg(50)->Arg(500);

void BM_StudentizedRange(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  double q = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(studentized_range_survival(q, k));
    q = q > 6.0 ? 0.1 : q + 0.37;
  }
}
BENCHMARK(BM_StudentizedRange)->Arg(3)->Arg(6)->Arg(10);

void BM_FriedmanNemenyi(benchmark::State& state) {
  RngStream rng(3);
  PairedScoreTable t;
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  for (int g = 0; g < 6; ++g) t.group_names.push_back("g" + std::to_string(g));
  t.values = MatrixD(n, 6);
  for (double& v : t.values.values()) v = static_cast<double>(rng.below(3));
  for (auto _ : state) benchmark::DoNotOptimize(nemenyi_test(t));
}
BENCHMARK(BM_FriedmanNemenyi)->Arg(30)->Arg(300);

}  // namespace
}  // namespace l2grade

BENCHMARK_MAIN();
