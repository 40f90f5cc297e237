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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "jghm/bp.hpp"
#include "jghm/encoder.hpp"
#include "jghm/rng.hpp"
#include "jghm/sampler.hpp"
#include "jghm/score.hpp"
#include "jghm_test_support.hpp"

namespace jghm {
namespace {

using testing::leaves_of;
using testing::max_abs_diff;
using testing::NaiveJoint;
using testing::naive_denoiser;
using testing::pflip_model;
using testing::tiny_topology;

constexpr int S = 3;
constexpr std::size_t kLeaves = 4;
constexpr std::size_t kConfigs = 81;

JghmModel constant_kernel_model(std::vector<double> prior) {
  const TransitionKernel k(S, {0.1, 0.6, 0.3, 0.1, 0.6, 0.3, 0.1, 0.6, 0.3});
  JghmModel m = make_constant_model(tiny_topology(), k);
  m.root_prior = std::move(prior);
  return m;
}

class RandomTinyModel : public ::testing::TestWithParam<std::uint64_t> {
 protected:
  void SetUp() override {
    model_ = pflip_model(tiny_topology(), 0.15 + 0.1 * (GetParam() % 5), GetParam());
    joint_ = testing::naive_joint(model_);
  }
  JghmModel model_;
  NaiveJoint joint_;
};

TEST_P(RandomTinyModel, RootPosteriorMatchesNaive) {
  for (Modality m : {Modality::kImage, Modality::kText})
    for (std::size_t c = 0; c < kConfigs; ++c) {
      const auto leaves = leaves_of(c, kLeaves, S);
      const auto bp = root_posterior(model_, m, leaves);
      EXPECT_LE(max_abs_diff(bp, testing::naive_root_posterior(joint_, m, c)), 1e-9);
      const auto once = root_posterior(model_, m, leaves, PriorPlacement::kOnceAtRoot);
      EXPECT_LE(max_abs_diff(bp, once), 1e-12);
    }
}

TEST_P(RandomTinyModel, ScoreIsLogRatio) {
  const auto pi = joint_.marginal_im();
  const auto pt = joint_.marginal_tx();
  for (std::size_t x = 0; x < kConfigs; x += 4)
    for (std::size_t y = 0; y < kConfigs; ++y) {
      const double s = optimal_score(model_, leaves_of(x, kLeaves, S), leaves_of(y, kLeaves, S));
      const double expected = std::log(joint_(x, y) / (pi[x] * pt[y]));
      EXPECT_NEAR(s, expected, 1e-9);
      EXPECT_NEAR(std::exp(s) * pi[x] * pt[y] / joint_(x, y), 1.0, 1e-9);
    }
}

TEST_P(RandomTinyModel, DenoiserMatchesNaive) {
  rng::Stream stream(GetParam(), rng::Purpose::kTest, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const Sample s = sample_joint(model_, stream);
    const double t = trial == 0 ? 0.0 : 0.25 * trial * trial;
    const NoisyImage z = noise_image(s.image(), t, stream);
    const auto bp = bayes_denoiser(model_, z, s.text());
    const auto naive = naive_denoiser(joint_, z, configuration_index(s.text(), S));
    EXPECT_LE(max_abs_diff(bp, naive), 1e-9) << "t=" << t;
  }
}

TEST_P(RandomTinyModel, NextTokenMatchesNaiveAndParallel) {
  rng::Stream stream(GetParam(), rng::Purpose::kTest, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const Sample s = sample_joint(model_, stream);
    const std::size_t x = configuration_index(s.image(), S);
    const auto parallel = next_token_posteriors_parallel(model_, s.image(), s.text());
    ASSERT_EQ(parallel.size(), kLeaves);
    for (std::size_t i = 0; i < kLeaves; ++i) {
      const std::vector<int> prefix(s.text().begin(), s.text().begin() + i);
      const auto seq = next_token_posterior_bp(model_, s.image(), prefix);
      EXPECT_LE(max_abs_diff(seq, testing::naive_next_token(joint_, x, kLeaves, prefix)), 1e-9);
      EXPECT_LE(max_abs_diff(seq, parallel[i]), 1e-12);
    }
  }
}

TEST_P(RandomTinyModel, CanonicalEncoderReproducesScore) {
  const auto e_im = canonical_encoder(model_, Modality::kImage);
  const auto e_tx = canonical_encoder(model_, Modality::kText);
  for (std::size_t x = 0; x < kConfigs; x += 7)
    for (std::size_t y = 0; y < kConfigs; y += 5) {
      const auto li = leaves_of(x, kLeaves, S);
      const auto lt = leaves_of(y, kLeaves, S);
      const auto a = e_im->encode(li);
      const auto b = e_tx->encode(lt);
      double inner = 0.0;
      for (int s = 0; s < S; ++s) inner += a[s] * b[s] * model_.root_prior[s];
      EXPECT_NEAR(inner, std::exp(optimal_score(model_, li, lt)), 1e-9 * inner);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomTinyModel, ::testing::Values(1u, 2u, 3u, 4u, 5u));

TEST(RootPosterior, PermutationModelIsOneHot) {
  const JghmModel m = pflip_model(tiny_topology(), 0.0, 2);
  for (int r = 0; r < S; ++r) {
    rng::Stream stream(1, rng::Purpose::kTest, r);
    const auto tree = sample_tree(m, Modality::kImage, r, stream);
    const auto post = root_posterior(m, Modality::kImage, tree.back());
    for (int s = 0; s < S; ++s) EXPECT_EQ(post[s], s == r ? 1.0 : 0.0);
  }
}

TEST(RootPosterior, ConstantKernelsGivePrior) {
  const JghmModel m = constant_kernel_model({0.2, 0.3, 0.5});
  for (std::size_t c = 0; c < kConfigs; c += 11) {
    const auto post = root_posterior(m, Modality::kText, leaves_of(c, kLeaves, S));
    EXPECT_LE(max_abs_diff(post, m.root_prior), 1e-12);
  }
}

TEST(OptimalScore, PermutationModel) {
  TreeTopology t = tiny_topology();
  t.states = 2;
  const JghmModel m = pflip_model(t, 0.0, 3);
  rng::Stream stream(1, rng::Purpose::kTest, 0);
  const auto im0 = sample_tree(m, Modality::kImage, 0, stream).back();
  const auto tx0 = sample_tree(m, Modality::kText, 0, stream).back();
  const auto tx1 = sample_tree(m, Modality::kText, 1, stream).back();
  EXPECT_NEAR(optimal_score(m, im0, tx0), std::log(2.0), 1e-15);
  EXPECT_EQ(optimal_score(m, im0, tx1), kNegInf);
  const double clamp = 7.5;
  EXPECT_EQ(optimal_score(m, im0, tx1, clamp), -clamp);
}

TEST(OptimalScore, ClampBoundsValue) {
  const JghmModel m = pflip_model(tiny_topology(), 0.05, 1);
  const std::vector<int> a{0, 0, 0, 0}, b{0, 0, 0, 0};
  const double raw = optimal_score(m, a, b);
  EXPECT_EQ(optimal_score(m, a, b, 0.1), std::min(raw, 0.1));
  EXPECT_NEAR(readout_bound(m), 4 * 2 * std::log(effective_b_psi(m)), 1e-12);
}

TEST(Denoiser, LargeTimeRecoversImage) {
  const JghmModel m = pflip_model(tiny_topology(), 0.3, 7);
  rng::Stream stream(2, rng::Purpose::kTest, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const Sample s = sample_joint(m, stream);
    const NoisyImage z = noise_image(s.image(), 1e6, stream);
    const auto d = bayes_denoiser(m, z, s.text());
    for (std::size_t v = 0; v < kLeaves; ++v) EXPECT_NEAR(d[v], s.image()[v] + 1.0, 1e-3);
  }
}

TEST(Denoiser, ConstantKernelsAtZeroTime) {
  const JghmModel m = constant_kernel_model({0.2, 0.3, 0.5});
  // Every leaf has law (0.1, 0.6, 0.3) whatever its parent.
  const double mean = 1 * 0.1 + 2 * 0.6 + 3 * 0.3;
  const NoisyImage z{0.0, std::vector<double>(kLeaves, 0.0)};
  const std::vector<int> text{2, 0, 1, 1};
  for (double v : bayes_denoiser(m, z, text)) EXPECT_NEAR(v, mean, 1e-12);
}

TEST(NextToken, PermutationModelIsOneHot) {
  const JghmModel m = pflip_model(tiny_topology(), 0.0, 5);
  rng::Stream stream(3, rng::Purpose::kTest, 0);
  const Sample s = sample_joint(m, stream);
  const auto parallel = next_token_posteriors_parallel(m, s.image(), s.text());
  for (std::size_t i = 0; i < kLeaves; ++i) {
    const std::vector<int> prefix(s.text().begin(), s.text().begin() + i);
    const auto seq = next_token_posterior_bp(m, s.image(), prefix);
    for (int a = 0; a < S; ++a) {
      EXPECT_EQ(seq[a], a == s.text()[i] ? 1.0 : 0.0);
      EXPECT_EQ(parallel[i][a], a == s.text()[i] ? 1.0 : 0.0);
    }
  }
}

TEST(NextToken, ConstantLeafKernelsIgnorePrefix) {
  JghmModel m = pflip_model(tiny_topology(), 0.3, 6);
  const TransitionKernel k(S, {0.2, 0.5, 0.3, 0.2, 0.5, 0.3, 0.2, 0.5, 0.3});
  for (auto& kernel : m.kernels_tx[1]) kernel = k;
  const std::vector<int> image{0, 1, 2, 1};
  const std::vector<int> text{2, 2, 0, 1};
  for (std::size_t i = 0; i < kLeaves; ++i) {
    const std::vector<int> prefix(text.begin(), text.begin() + i);
    EXPECT_LE(max_abs_diff(next_token_posterior_bp(m, image, prefix), {0.2, 0.5, 0.3}), 1e-12);
  }
}

TEST(NextToken, SingleTextLeaf) {
  TreeTopology t;
  t.depth = 1;
  t.branching_im = {2};
  t.branching_tx = {1};
  t.states = 3;
  const JghmModel m = pflip_model(t, 0.4, 2);
  const std::vector<int> image{2, 0};
  const std::vector<int> text{1};
  const auto parallel = next_token_posteriors_parallel(m, image, text);
  ASSERT_EQ(parallel.size(), 1u);
  // First token: sum_s P(s | image) K(s, a).
  const auto post = root_posterior(m, Modality::kImage, image);
  std::vector<double> expected(S, 0.0);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < S; ++a) expected[a] += post[s] * m.kernels_tx[0][0](s, a);
  EXPECT_LE(max_abs_diff(parallel[0], expected), 1e-14);
}

TEST(CanonicalEncoder, Examples) {
  const JghmModel perm = pflip_model(tiny_topology(), 0.0, 1);
  rng::Stream stream(1, rng::Purpose::kTest, 0);
  const auto tree = sample_tree(perm, Modality::kImage, 2, stream);
  EXPECT_EQ(canonical_encoder(perm, Modality::kImage)->encode(tree.back()), (std::vector<double>{0, 0, 3}));

  const JghmModel flat = constant_kernel_model({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const std::vector<int> leaves{0, 1, 2, 0};
  for (double v : canonical_encoder(flat, Modality::kText)->encode(leaves)) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ScoreBound, HoldsOverAllPairs) {
  for (std::uint64_t seed : {1u, 2u}) {
    const JghmModel m = pflip_model(tiny_topology(), 0.3, seed);
    const double b = effective_b_psi(m);
    const int mb = tiny_topology().max_first_branching();
    const double bound = 2 * mb * std::log(b);
    const double floor = 1.0 / (std::pow(b, 2 * mb) * S);
    for (std::size_t x = 0; x < kConfigs; ++x) {
      const auto li = leaves_of(x, kLeaves, S);
      for (double p : root_posterior(m, Modality::kImage, li)) EXPECT_GE(p, floor);
      for (std::size_t y = 0; y < kConfigs; y += 3)
        EXPECT_LE(std::abs(optimal_score(m, li, leaves_of(y, kLeaves, S))), bound);
    }
  }
}

}  // namespace
}  // namespace jghm
