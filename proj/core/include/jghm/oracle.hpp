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

#include <cstddef>
#include <span>
#include <vector>

#include "jghm/encoder.hpp"
#include "jghm/model.hpp"
#include "jghm/sampler.hpp"
#include "jghm/score.hpp"

namespace jghm::oracle {

inline constexpr double kDefaultBudget = 2e6;

/// Brute-force joint law of the two leaf vectors.
///
/// Leaf configurations are indexed lexicographically (see
/// configuration_index). All tables are in the probability domain.
struct JointTable {
  int states = 0;
  std::size_t d_im = 0;
  std::size_t d_tx = 0;
  std::size_t n_im = 0;  // S^d_im
  std::size_t n_tx = 0;  // S^d_tx
  std::vector<double> root_prior;
  std::vector<double> im_given_root;  // [s * n_im + x]
  std::vector<double> tx_given_root;  // [s * n_tx + y]
  std::vector<double> joint;          // [x * n_tx + y]
  std::vector<double> marginal_im;
  std::vector<double> marginal_tx;

  double operator()(std::size_t x, std::size_t y) const { return joint[x * n_tx + y]; }
  std::size_t count(Modality m) const { return m == Modality::kImage ? n_im : n_tx; }
  std::size_t length(Modality m) const { return m == Modality::kImage ? d_im : d_tx; }
  const std::vector<double>& marginal(Modality m) const {
    return m == Modality::kImage ? marginal_im : marginal_tx;
  }
};

/// Number of full node configurations, S^(all nodes including the root).
double configuration_count(const TreeTopology& topology);

/// Sums products of prior and kernel entries over every assignment of every
/// node. Throws InvariantError when configuration_count exceeds `budget`.
JointTable enumerate_joint(const JghmModel& model, double budget = kDefaultBudget);

/// P(root | leaves of one modality) by Bayes rule over the table.
std::vector<double> exact_conditional_root(const JointTable& table, Modality m,
                                           std::span<const int> leaves);

/// MI(x_im, x_tx) in nats.
double exact_mutual_information(const JointTable& table);

/// Partition of one modality's configurations by equal quantized encoder output.
struct Fibers {
  Modality modality = Modality::kImage;
  std::vector<int> fiber_of;  // configuration -> fiber id
  int count = 0;
};

Fibers encoder_fibers(const JointTable& table, const Encoder& encoder);

/// Law of the other modality given each fiber: out[f][y] = P(y | fiber f).
std::vector<std::vector<double>> fiber_conditionals(const JointTable& table, const Fibers& fibers);

/// E_x KL(P(other | x) || P(other | E(x))).
double exact_suff_encoder(const JointTable& table, const Encoder& encoder);

/// MI(E(x), other), the information the encoder keeps.
double exact_encoder_information(const JointTable& table, const Encoder& encoder);

/// Sum of the two expected KL terms against the score-induced joint
/// P_S(x, y) ~ exp(S(x, y)) P(x) P(y). +inf if a positive-mass pair gets
/// zero induced mass.
double exact_suff_score(const JointTable& table, const ScoreFunction& score);

/// E[x_im | z_t, x_tx] with states read as 1..S, from Gaussian leaf densities.
std::vector<double> exact_denoiser(const JointTable& table, const NoisyImage& z,
                                   std::span<const int> x_tx);

/// E[x_im | z_t, x_tx in the set weighted by `text_weights`] where the joint
/// law of (x_im, set) is sum_y w_y P(x_im, y).
std::vector<double> exact_denoiser_weighted(const JointTable& table, const NoisyImage& z,
                                            std::span<const double> text_weights);

/// Law of x_tx given the image, P(. | x_im), over all text configurations.
std::vector<double> text_given_image(const JointTable& table, std::span<const int> x_im);

/// Next-token law for a prefix under a distribution over text configurations.
std::vector<double> next_token_from_text_law(const JointTable& table,
                                             std::span<const double> text_law,
                                             std::span<const int> prefix);

/// mu*(x_tx[i] | x_im, prefix) with i = prefix.size().
std::vector<double> exact_next_token(const JointTable& table, std::span<const int> x_im,
                                     std::span<const int> prefix);

/// Large-M limit of the zero-shot classifier:
///   sum_y P_S(y | x_im) P(root | y).
std::vector<double> exact_zsc_limit(const JointTable& table, const ScoreFunction& score,
                                    std::span<const int> x_im);

/// P(x_im | x_tx) as a vector over image configurations.
std::vector<double> image_given_text(const JointTable& table, std::span<const int> x_tx);

/// KL(p || q) in nats with 0 log 0 = 0 and +inf when q misses mass of p.
double kl_divergence(std::span<const double> p, std::span<const double> q);

}  // namespace jghm::oracle
