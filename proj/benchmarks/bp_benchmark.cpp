// Copyright 2026 The JGHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <vector>

#include "jghm/bp.hpp"
#include "jghm/model.hpp"
#include "jghm/oracle.hpp"
#include "jghm/rng.hpp"
#include "jghm/sampler.hpp"

namespace {

using namespace jghm;

// Depth 4, branching 3, 10 states: 81 leaves per tree.
JghmModel large_model(int depth, int branching, int states) {
  ModelGenSpec spec;
  spec.topology.depth = depth;
  spec.topology.branching_im.assign(depth, branching);
  spec.topology.branching_tx.assign(depth, branching);
  spec.topology.states = states;
  spec.p_flip = 0.2;
  spec.seed = 1;
  return make_pflip_model(spec);
}

const JghmModel& model() {
  static const JghmModel m = large_model(4, 3, 10);
  return m;
}

const Sample& sample() {
  static const Sample s = [] {
    rng::Stream stream(1, rng::Purpose::kTest, 0);
    return sample_joint(model(), stream);
  }();
  return s;
}

void BM_RootPosterior(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(root_posterior(model(), Modality::kImage, sample().image()));
}
BENCHMARK(BM_RootPosterior);

void BM_OptimalScore(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(optimal_score(model(), sample().image(), sample().text()));
}
BENCHMARK(BM_OptimalScore);

void BM_BayesDenoiser(benchmark::State& state) {
  rng::Stream stream(2, rng::Purpose::kTest, 0);
  const NoisyImage z = noise_image(sample().image(), 1.0, stream);
  for (auto _ : state) benchmark::DoNotOptimize(bayes_denoiser(model(), z, sample().text()));
}
BENCHMARK(BM_BayesDenoiser);

void BM_NextTokenSequential(benchmark::State& state) {
  const auto& text = sample().text();
  for (auto _ : state) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      const std::vector<int> prefix(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(i));
      benchmark::DoNotOptimize(next_token_posterior_bp(model(), sample().image(), prefix));
    }
  }
}
BENCHMARK(BM_NextTokenSequential)->Unit(benchmark::kMillisecond);

void BM_NextTokenParallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(next_token_posteriors_parallel(model(), sample().image(), sample().text()));
}
BENCHMARK(BM_NextTokenParallel)->Unit(benchmark::kMillisecond);

void BM_EnumerateTiny(benchmark::State& state) {
  const JghmModel tiny = large_model(2, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(oracle::enumerate_joint(tiny));
}
BENCHMARK(BM_EnumerateTiny)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
