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

#include <algorithm>
#include <cmath>
#include <vector>

#include "jghm/belief.hpp"
#include "jghm/rng.hpp"

namespace jghm {
namespace {

TEST(Normalize, ShiftsMaximumToZero) {
  EXPECT_EQ(normalize({1, 3, 2}), (Belief{-2, 0, -1}));
  EXPECT_EQ(normalize({5, 5}), (Belief{0, 0}));
  EXPECT_EQ(normalize({kNegInf, 0}), (Belief{kNegInf, 0}));
  EXPECT_THROW(normalize({kNegInf, kNegInf}), InvariantError);
}

TEST(Normalize, Idempotent) {
  rng::Stream stream(1, rng::Purpose::kTest, 0);
  for (int i = 0; i < 100; ++i) {
    Belief b(4);
    for (double& v : b) v = 10 * stream.normal();
    if (i % 3 == 0) b[i % 4] = kNegInf;
    const Belief once = normalize(b);
    EXPECT_EQ(normalize(once), once);
  }
}

TEST(LogSumExp, SkipsImpossibleTerms) {
  const std::vector<double> v{kNegInf, std::log(2.0), std::log(3.0)};
  EXPECT_NEAR(log_sum_exp(v), std::log(5.0), 1e-15);
  const std::vector<double> none{kNegInf, kNegInf};
  EXPECT_EQ(log_sum_exp(none), kNegInf);
  const std::vector<double> big{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
}

TEST(Softmax, SumsToOne) {
  const std::vector<double> b{0.0, kNegInf, std::log(3.0)};
  const auto p = softmax(b);
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[2], 0.75, 1e-15);
}

TEST(StepDown, PermutationReindexes) {
  const TransitionKernel id = TransitionKernel::identity(2);
  const Belief h{0, -1};
  EXPECT_EQ(step_down(id, h), h);
}

TEST(StepDown, UniformKernelGivesConstant) {
  const TransitionKernel u = TransitionKernel::uniform(3);
  const Belief h{0, -0.5, -2};
  const double expected = std::log((1 + std::exp(-0.5) + std::exp(-2.0)) / 3);
  for (double v : step_down(u, h)) EXPECT_NEAR(v, expected, 1e-15);
}

TEST(StepDown, PointEvidenceSelectsColumn) {
  const TransitionKernel k(2, {0.9, 0.1, 0.2, 0.8});
  const Belief h{0, kNegInf};
  const Belief out = step_down(k, h);
  EXPECT_NEAR(out[0], std::log(0.9), 1e-15);
  EXPECT_NEAR(out[1], std::log(0.2), 1e-15);
}

TEST(StepDown, PriorShareIsAdded) {
  const TransitionKernel k(2, {0.9, 0.1, 0.2, 0.8});
  const Belief h{0, kNegInf};
  const std::vector<double> share{std::log(0.25), std::log(0.75)};
  const Belief out = step_down(k, h, share);
  EXPECT_NEAR(out[0], std::log(0.9 * 0.25), 1e-15);
  EXPECT_NEAR(out[1], std::log(0.2 * 0.75), 1e-15);
}

TEST(StepDown, ShiftEquivariant) {
  rng::Stream stream(2, rng::Purpose::kTest, 0);
  const TransitionKernel k(3, {0.5, 0.3, 0.2, 0.1, 0.1, 0.8, 0.0, 0.4, 0.6});
  for (int i = 0; i < 50; ++i) {
    Belief h(3);
    for (double& v : h) v = 5 * stream.normal();
    const double c = 100 * stream.normal();
    Belief shifted = h;
    for (double& v : shifted) v += c;
    const Belief a = step_down(k, h);
    const Belief b = step_down(k, shifted);
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(b[s], a[s] + c, 1e-12 * std::max(1.0, std::abs(c)));
  }
}

TEST(StepUp, UsesColumns) {
  const TransitionKernel k(2, {0.9, 0.1, 0.2, 0.8});
  const Belief h{0, kNegInf};
  const Belief out = step_up(k, h);
  EXPECT_NEAR(out[0], std::log(0.9), 1e-15);
  EXPECT_NEAR(out[1], std::log(0.1), 1e-15);
}

TEST(Cavity, ImpossibleStatesStayImpossible) {
  const Belief a{0, kNegInf, -1};
  const Belief b{-1, kNegInf, -3};
  EXPECT_EQ(cavity(a, b), (Belief{1, kNegInf, 2}));
}

TEST(Evidence, UnitTime) {
  const std::vector<double> z{2.0};
  const auto e = leaf_evidence_from_noise(1.0, z, 3);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_NEAR(e[0][0], -0.5, 1e-15);
  EXPECT_EQ(e[0][1], 0.0);
  EXPECT_NEAR(e[0][2], -0.5, 1e-15);
}

TEST(Evidence, ZeroTimeIsFlat) {
  const std::vector<double> z{0.0, 0.0};
  for (const auto& b : leaf_evidence_from_noise(0.0, z, 4)) EXPECT_EQ(b, flat_evidence(4));
}

TEST(Evidence, LargeTimeIsPeaked) {
  const double t = 100.0;
  const std::vector<double> z{t * 2};
  const auto e = leaf_evidence_from_noise(t, z, 3);
  // Neighbouring states sit t / 2 below the observed one.
  EXPECT_EQ(e[0][1], 0.0);
  EXPECT_NEAR(e[0][0], -t / 2, 1e-9);
  EXPECT_NEAR(e[0][2], -t / 2, 1e-9);
  EXPECT_GE(softmax(e[0])[1], 1 - 1e-20);
}

TEST(Evidence, PointAndFlat) {
  EXPECT_EQ(point_evidence(3, 1), (Belief{kNegInf, 0, kNegInf}));
  EXPECT_EQ(flat_evidence(2), (Belief{0, 0}));
  const std::vector<double> p{0.5, 0.0};
  EXPECT_EQ(log_of(p), (Belief{std::log(0.5), kNegInf}));
}

}  // namespace
}  // namespace jghm
