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

#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "jghm/model.hpp"

namespace jghm {

/// Log-domain vector over the S states; -inf marks an impossible state.
using Belief = std::vector<double>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum exp(v)) with -inf terms skipped; -inf when every term is -inf.
double log_sum_exp(std::span<const double> v);

/// Shifts by the maximum so the largest entry is 0. Throws InvariantError
/// when every entry is -inf.
Belief normalize(Belief b);

/// Probability vector proportional to exp(b).
std::vector<double> softmax(std::span<const double> b);

/// Elementwise log; zeros map to -inf.
Belief log_of(std::span<const double> p);

/// Point evidence: 0 at `state`, -inf elsewhere.
Belief point_evidence(int states, int state);

/// Uninformative evidence (all zeros).
Belief flat_evidence(int states);

/// Message from a child to its parent through `kernel`:
///   out_s = log sum_a K(s, a) exp(h_a)  [+ log_prior_share_s]
/// `log_prior_share` carries the (1/m) * log P(s) factor used at level 1
/// when the root prior is spread over the root's children.
Belief step_down(const TransitionKernel& kernel, std::span<const double> h,
                 std::span<const double> log_prior_share = {});

/// Message from a parent to its child: out_a = log sum_s K(s, a) exp(h_s).
Belief step_up(const TransitionKernel& kernel, std::span<const double> h);

/// a - b where -inf - (-inf) is -inf (the cavity of an impossible state).
Belief cavity(std::span<const double> a, std::span<const double> b);

/// Per-leaf evidence from a noisy observation:
///   normalize((-t (s - z_v / t)^2 / 2)_s) with states s = 1..S,
/// and the flat belief when t == 0.
std::vector<Belief> leaf_evidence_from_noise(double t, std::span<const double> z, int states);

}  // namespace jghm
