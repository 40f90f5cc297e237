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

#include <optional>
#include <span>
#include <vector>

#include "jghm/belief.hpp"
#include "jghm/model.hpp"
#include "jghm/sampler.hpp"

namespace jghm {

/// Where the root prior enters the leaves-to-root pass.
enum class PriorPlacement {
  kSplitAtLevelOne,  // P(s)^(1/m1) folded into every level-1 message
  kOnceAtRoot,       // log P(s) added once to the root aggregate
  kNone,             // likelihood only
};

/// Messages of one tree.
///
/// h[l][j] is the normalized aggregate at node j of level l (h[depth] is the
/// leaf evidence), q[l][j] the message node j of level l sends to its parent
/// (q[0] is empty). `up` is filled by passes that run from the root back to
/// the leaves: up[l][j] is the full log-belief of node j at level l.
struct MessageStack {
  std::vector<std::vector<Belief>> h;
  std::vector<std::vector<Belief>> q;
  std::vector<std::vector<Belief>> up;
};

/// Point evidence for every observed leaf (0-based states).
std::vector<Belief> leaf_point_evidence(int states, std::span<const int> leaves);

/// Leaves-to-root pass of the given tree.
MessageStack downsweep(const JghmModel& model, Modality m, std::vector<Belief> leaf_evidence,
                       PriorPlacement prior);

/// Normalized log root posterior, log P(s | leaves) up to a shift.
Belief root_log_posterior(const JghmModel& model, Modality m, std::span<const int> leaves,
                          PriorPlacement prior = PriorPlacement::kSplitAtLevelOne);

/// P(root = s | leaves of one modality).
std::vector<double> root_posterior(const JghmModel& model, Modality m, std::span<const int> leaves,
                                   PriorPlacement prior = PriorPlacement::kSplitAtLevelOne);

/// log sum_s p_im(s) p_tx(s) / P(s); -inf when the supports are disjoint.
double score_from_posteriors(std::span<const double> prior, std::span<const double> p_im,
                             std::span<const double> p_tx);

/// Readout bound 4 * m * log B_psi with m the larger level-1 branching factor.
double readout_bound(const JghmModel& model);

/// Pointwise mutual information log[P(x_im, x_tx) / (P(x_im) P(x_tx))].
/// With `clamp`, the value is projected onto [-clamp, clamp].
double optimal_score(const JghmModel& model, std::span<const int> x_im, std::span<const int> x_tx,
                     std::optional<double> clamp = std::nullopt);

/// Posterior of every image leaf given the noisy image and a root context
/// (normalized log-belief over the root contributed by everything outside
/// the image tree, prior included). Fills `stack` when non-null.
std::vector<std::vector<double>> image_leaf_posteriors(const JghmModel& model, const NoisyImage& z,
                                                       std::span<const double> root_context,
                                                       MessageStack* stack = nullptr);

/// E[x_im | z_t, x_tx] with states read as 1..S.
std::vector<double> bayes_denoiser(const JghmModel& model, const NoisyImage& z,
                                   std::span<const int> x_tx, MessageStack* stack = nullptr);

/// Denoiser given an explicit root context instead of a text.
std::vector<double> denoiser_with_context(const JghmModel& model, const NoisyImage& z,
                                          std::span<const double> root_context);

/// mu(x_tx[i] | x_im, x_tx[0..i)) for prefix length i = prefix.size(),
/// computed by a fresh two-pass run with the prefix clamped.
std::vector<double> next_token_posterior_bp(const JghmModel& model, std::span<const int> x_im,
                                            std::span<const int> prefix);

/// Same, with an explicit normalized log root context in place of the image.
std::vector<double> next_token_posterior_with_context(const JghmModel& model,
                                                      std::span<const double> root_context,
                                                      std::span<const int> prefix);

/// All next-token posteriors of a teacher-forced text in one grouped
/// downsweep and one upsweep: entry i is mu(x_tx[i] | x_im, x_tx[0..i)).
/// `stack` receives per-leaf grouped messages (h, q, up indexed [l][leaf]).
std::vector<std::vector<double>> next_token_posteriors_parallel(const JghmModel& model,
                                                                std::span<const int> x_im,
                                                                std::span<const int> x_tx,
                                                                MessageStack* stack = nullptr);

std::vector<std::vector<double>> next_token_posteriors_parallel_with_context(
    const JghmModel& model, std::span<const double> root_context, std::span<const int> x_tx,
    MessageStack* stack = nullptr);

}  // namespace jghm
