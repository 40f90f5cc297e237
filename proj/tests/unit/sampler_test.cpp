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

#include "jghm/oracle.hpp"
#include "jghm/rng.hpp"
#include "jghm/sampler.hpp"
#include "jghm/score.hpp"
#include "jghm_test_support.hpp"

namespace jghm {
namespace {

using testing::pflip_model;
using testing::tiny_topology;

constexpr std::size_t kDraws = 100000;

TreeTopology small_topology() {
  TreeTopology t;
  t.depth = 2;
  t.branching_im = {2, 1};
  t.branching_tx = {1, 2};
  t.states = 2;
  return t;
}

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1 - p) / static_cast<double>(n)); }

TEST(SampleJoint, PermutationModelIsDeterministicGivenRoot) {
  const JghmModel m = pflip_model(tiny_topology(), 0.0, 3);
  std::vector<std::vector<int>> image_of(3), text_of(3);
  rng::Stream stream(1, rng::Purpose::kTest, 0);
  for (int i = 0; i < 300; ++i) {
    const Sample s = sample_joint(m, stream);
    if (image_of[s.root].empty()) {
      image_of[s.root] = s.image();
      text_of[s.root] = s.text();
    }
    EXPECT_EQ(s.image(), image_of[s.root]);
    EXPECT_EQ(s.text(), text_of[s.root]);
    rng::Stream class_stream(2, rng::Purpose::kTest, i);
    EXPECT_EQ(sample_text_for_class(m, s.root, class_stream), s.text());
  }
}

TEST(SampleJoint, ShapesFollowTopology) {
  TreeTopology t = small_topology();
  const JghmModel m = pflip_model(t, 0.3, 1);
  rng::Stream stream(1, rng::Purpose::kTest, 0);
  const Sample s = sample_joint(m, stream);
  ASSERT_EQ(s.levels_im.size(), 2u);
  EXPECT_EQ(s.levels_im[0].size(), 2u);
  EXPECT_EQ(s.levels_im[1].size(), 2u);
  EXPECT_EQ(s.levels_tx[0].size(), 1u);
  EXPECT_EQ(s.levels_tx[1].size(), 2u);
}

TEST(SampleJoint, UniformModelHasUniformLeaves) {
  const JghmModel m = make_constant_model(tiny_topology(), TransitionKernel::uniform(3));
  std::vector<std::vector<double>> counts(4, std::vector<double>(3, 0.0));
  std::vector<double> roots(3, 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) {
    rng::Stream stream(5, rng::Purpose::kJointSample, i);
    const Sample s = sample_joint(m, stream);
    roots[s.root] += 1;
    for (int v = 0; v < 4; ++v) counts[v][s.image()[v]] += 1;
  }
  const double se = binomial_se(1.0 / 3, kDraws);
  for (int s = 0; s < 3; ++s) {
    EXPECT_NEAR(roots[s] / kDraws, 1.0 / 3, 4 * se);
    for (int v = 0; v < 4; ++v) EXPECT_NEAR(counts[v][s] / kDraws, 1.0 / 3, 4 * se);
  }
}

TEST(SampleJoint, EmpiricalJointMatchesEnumeration) {
  const JghmModel m = pflip_model(small_topology(), 0.4, 2);
  const oracle::JointTable table = oracle::enumerate_joint(m);
  std::vector<double> counts(table.joint.size(), 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) {
    rng::Stream stream(6, rng::Purpose::kJointSample, i);
    const Sample s = sample_joint(m, stream);
    counts[configuration_index(s.image(), 2) * table.n_tx + configuration_index(s.text(), 2)] += 1;
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    EXPECT_NEAR(counts[c] / kDraws, table.joint[c], 4 * binomial_se(table.joint[c], kDraws) + 1e-12)
        << "cell " << c;
  }
}

TEST(SampleJoint, ModalitiesIndependentGivenRoot) {
  const JghmModel m = pflip_model(small_topology(), 0.5, 4);
  const oracle::JointTable table = oracle::enumerate_joint(m);
  for (int r = 0; r < 2; ++r) {
    std::vector<double> joint(table.n_im * table.n_tx, 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < kDraws; ++i) {
      rng::Stream stream(7, rng::Purpose::kJointSample, i);
      const Sample s = sample_joint(m, stream);
      if (s.root != r) continue;
      ++n;
      joint[configuration_index(s.image(), 2) * table.n_tx + configuration_index(s.text(), 2)] += 1;
    }
    // Pearson chi-square against the product of the exact conditionals.
    double chi2 = 0.0;
    for (std::size_t x = 0; x < table.n_im; ++x)
      for (std::size_t y = 0; y < table.n_tx; ++y) {
        const double expected = n * table.im_given_root[r * table.n_im + x] * table.tx_given_root[r * table.n_tx + y];
        if (expected > 0) chi2 += std::pow(joint[x * table.n_tx + y] - expected, 2) / expected;
      }
    // 15 degrees of freedom; 0.9999 quantile is about 44.3.
    EXPECT_LT(chi2, 44.3) << "root " << r;
  }
}

TEST(ContrastiveBatch, SizeAndArgumentChecks) {
  const JghmModel m = pflip_model(tiny_topology(), 0.2, 1);
  rng::Stream stream(1, rng::Purpose::kContrastive, 0);
  const ContrastiveBatch b = sample_contrastive_batch(m, 2, stream);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.texts.size(), 2u);
  EXPECT_THROW(sample_contrastive_batch(m, 1, stream), InvariantError);
}

TEST(ContrastiveBatch, NegativeRootsAreIndependent) {
  // With p_flip = 0 the leaves reveal the root, so the root pair of a
  // negative is read off its leaves.
  const JghmModel m = pflip_model(tiny_topology(), 0.0, 3);
  std::vector<std::vector<int>> image_of(3), text_of(3);
  rng::Stream probe(1, rng::Purpose::kTest, 0);
  for (int i = 0; i < 200; ++i) {
    const Sample s = sample_joint(m, probe);
    image_of[s.root] = s.image();
    text_of[s.root] = s.text();
  }
  auto root_of = [](const std::vector<std::vector<int>>& table, const std::vector<int>& leaves) {
    for (int r = 0; r < 3; ++r)
      if (table[r] == leaves) return r;
    return -1;
  };
  std::vector<double> counts(9, 0.0), first(3, 0.0), second(3, 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) {
    rng::Stream stream(8, rng::Purpose::kContrastive, i);
    const ContrastiveBatch b = sample_contrastive_batch(m, 2, stream);
    ASSERT_EQ(root_of(image_of, b.images[0]), root_of(text_of, b.texts[0]));
    const int ri = root_of(image_of, b.images[1]);
    const int rt = root_of(text_of, b.texts[1]);
    ASSERT_GE(ri, 0);
    ASSERT_GE(rt, 0);
    counts[ri * 3 + rt] += 1;
    first[ri] += 1;
    second[rt] += 1;
  }
  double chi2 = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) {
      const double expected = first[a] * second[c] / kDraws;
      chi2 += std::pow(counts[a * 3 + c] - expected, 2) / expected;
    }
  // 4 degrees of freedom; 0.9999 quantile is about 23.5.
  EXPECT_LT(chi2, 23.5);
}

TEST(ContrastiveBatch, NegativeImageMarginalMatchesPositive) {
  const JghmModel m = pflip_model(small_topology(), 0.5, 9);
  std::vector<double> pos(4, 0.0), neg(4, 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) {
    rng::Stream stream(9, rng::Purpose::kContrastive, i);
    const ContrastiveBatch b = sample_contrastive_batch(m, 3, stream);
    pos[configuration_index(b.images[0], 2)] += 1;
    neg[configuration_index(b.images[2], 2)] += 1;
  }
  for (int c = 0; c < 4; ++c) {
    const double p = (pos[c] + neg[c]) / (2.0 * kDraws);
    EXPECT_NEAR(pos[c] / kDraws, neg[c] / kDraws, 4 * std::sqrt(2.0) * binomial_se(p, kDraws));
  }
}

TEST(NoiseImage, ZeroTimeAndInjectedGaussian) {
  const std::vector<int> x{0, 2, 1};
  rng::Stream stream(1, rng::Purpose::kNoise, 0);
  const NoisyImage z0 = noise_image(x, 0.0, stream);
  for (double v : z0.z) EXPECT_EQ(v, 0.0);

  const std::vector<double> g{0.0, 0.0, 0.0};
  const NoisyImage z1 = noise_image(x, 1.0, g);
  EXPECT_EQ(z1.z, (std::vector<double>{1.0, 3.0, 2.0}));

  const std::vector<double> g2{1.0, -1.0, 0.5};
  const NoisyImage z4 = noise_image(x, 4.0, g2);
  EXPECT_EQ(z4.z, (std::vector<double>{4.0 + 2.0, 12.0 - 2.0, 8.0 + 1.0}));

  EXPECT_THROW(noise_image(x, -1.0, stream), InvariantError);
}

TEST(NoiseImage, ScaledMeanRecoversImage) {
  const std::vector<int> x{0, 2, 1, 1};
  const double t = 4.0;
  const std::size_t n = 10000;
  std::vector<double> sum(4, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    rng::Stream stream(2, rng::Purpose::kNoise, i);
    const NoisyImage z = noise_image(x, t, stream);
    for (int v = 0; v < 4; ++v) sum[v] += z.z[v] / t;
  }
  // z / t has standard deviation 1 / sqrt(t).
  const double se = 1.0 / std::sqrt(t * n);
  for (int v = 0; v < 4; ++v) EXPECT_NEAR(sum[v] / n, x[v] + 1.0, 4 * se);
}

TEST(ClassText, MatchesExactConditional) {
  const JghmModel m = pflip_model(small_topology(), 0.5, 10);
  const oracle::JointTable table = oracle::enumerate_joint(m);
  for (int y = 0; y < 2; ++y) {
    std::vector<double> counts(table.n_tx, 0.0);
    for (std::size_t i = 0; i < kDraws; ++i) {
      rng::Stream stream(10, rng::Purpose::kClassText, i, y);
      counts[configuration_index(sample_text_for_class(m, y, stream), 2)] += 1;
    }
    for (std::size_t c = 0; c < table.n_tx; ++c) {
      const double p = table.tx_given_root[y * table.n_tx + c];
      EXPECT_NEAR(counts[c] / kDraws, p, 4 * binomial_se(p, kDraws) + 1e-12);
    }
  }
  rng::Stream stream(1, rng::Purpose::kClassText, 0);
  EXPECT_THROW(sample_text_for_class(m, 2, stream), InvariantError);
  EXPECT_THROW(sample_text_for_class(m, -1, stream), InvariantError);
}

TEST(Determinism, SameKeySameBits) {
  const JghmModel m = pflip_model(tiny_topology(), 0.3, 1);
  for (std::uint64_t i : {0u, 5u, 999u}) {
    rng::Stream a(42, rng::Purpose::kContrastive, i);
    rng::Stream b(42, rng::Purpose::kContrastive, i);
    const ContrastiveBatch ba = sample_contrastive_batch(m, 8, a);
    const ContrastiveBatch bb = sample_contrastive_batch(m, 8, b);
    EXPECT_EQ(ba.images, bb.images);
    EXPECT_EQ(ba.texts, bb.texts);
    const NoisyImage za = noise_image(ba.images[0], 2.0, a);
    const NoisyImage zb = noise_image(bb.images[0], 2.0, b);
    EXPECT_EQ(za.z, zb.z);
  }
}

}  // namespace
}  // namespace jghm
