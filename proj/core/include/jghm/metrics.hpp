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

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jghm/encoder.hpp"
#include "jghm/model.hpp"
#include "jghm/rng.hpp"
#include "jghm/score.hpp"

namespace jghm {

struct ReportMeta {
  std::optional<int> K;
  std::optional<int> M;
  std::optional<double> t;
  std::optional<double> p_flip_train;
  std::optional<double> p_flip_test;
  std::uint64_t seed = 0;
};

/// One scalar metric with its Monte-Carlo standard error (0 when exact).
struct RiskReport {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  ReportMeta meta;
  /// Upper bound the estimate is compared against, when one applies.
  std::optional<double> bound;
};

/// "name,estimate,se,n,K,M,t,p_flip_train,p_flip_test,seed"
std::string csv_header();
std::string to_csv_row(const RiskReport& report);

/// Mean and standard error of i.i.d. values; +inf propagates to the mean.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> values);

/// Symmetric InfoNCE loss of one batch (entry 0 is the positive pair).
double infonce_loss(const ScoreFunction& score, const std::vector<std::vector<int>>& images,
                    const std::vector<std::vector<int>>& texts);

/// Monte-Carlo CLIP risk over n batches of size K. Constant scores return
/// 2 log K with SE 0.
RiskReport clip_risk(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int K,
                     std::size_t n, std::uint64_t seed);

struct ClipLimitRow {
  int K = 0;
  RiskReport mi_estimate;  // -R(S*)/2 + log K
  RiskReport excess;       // R(S) - R(S*) on the same batches
};

/// For every K: the mutual-information estimate from the optimal score and
/// the excess risk of `score` over it, on common random numbers.
std::vector<ClipLimitRow> clip_excess_and_mi_limit(const JghmModel& model,
                                                   std::shared_ptr<const ScoreFunction> score,
                                                   std::span<const int> Ks, std::size_t n,
                                                   std::uint64_t seed);

/// Zero-shot class probabilities from pre-sampled class texts:
/// softmax_y [log mean_j exp S(x_im, texts[y][j]) + log prior[y]].
std::vector<double> zsc_predict_from_texts(const ScoreFunction& score, std::span<const double> prior,
                                           std::span<const int> x_im,
                                           const std::vector<std::vector<std::vector<int>>>& texts);

/// Samples M texts per class from `model` and classifies x_im.
std::vector<double> zsc_predict(const JghmModel& model, const ScoreFunction& score,
                                std::span<const int> x_im, int M, rng::Stream& stream);

/// E_x KL(P(y | x_im) || p_M(y | x_im)) with y the root.
RiskReport zsc_kl(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int M,
                  std::size_t n, std::uint64_t seed);

/// Expected cross-entropy of the M-sample classifier against the exact
/// class posterior, E_x sum_y P(y | x_im) (-log p_M(y | x_im)).
RiskReport zsc_classifier_risk(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int M,
                               std::size_t n, std::uint64_t seed);

/// Fraction of draws whose argmax zero-shot class equals the sampled root.
/// Logged only; there is no target value.
RiskReport zsc_accuracy(const JghmModel& model, std::shared_ptr<const ScoreFunction> score, int M,
                        std::size_t n, std::uint64_t seed);

/// (1/d_im) E||m*_t - M_t(z_t, E(x_tx))||^2 where M_t conditions on the
/// encoder fiber of the text. Requires an enumerable model. `bound` is
/// 2 S^2 Suff(E).
RiskReport cdm_estimation_error(const JghmModel& model, const Encoder& text_encoder, double t,
                                std::size_t n, std::uint64_t seed);

/// E sum_i KL(mu*(. | x_im, prefix) || mu(. | E(x_im), prefix)) where mu
/// conditions on the image encoder fiber, summed exactly over the joint.
/// `bound` is Suff(E).
RiskReport vlm_divergence_exact(const JghmModel& model, const Encoder& image_encoder);

/// Monte-Carlo version of vlm_divergence_exact over n joint draws.
RiskReport vlm_divergence(const JghmModel& model, const Encoder& image_encoder, std::size_t n,
                          std::uint64_t seed);

enum class Task { kClip, kZsc, kCdm, kVlm, kDiffusion };

const char* task_name(Task task);
Task task_from_name(const std::string& name);

struct EvalParams {
  int K = 8;
  double t = 1.0;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  // Diffusion only.
  double horizon = 20.0;
  double dt = 0.01;
};

struct MisspecResult {
  RiskReport misspec;
  RiskReport bayes;
  RiskReport excess;
};

/// Risk of the message-passing predictor built from `train` on data drawn
/// from `test`, next to the Bayes risk under `test`, on common random
/// numbers. Risks: CLIP = InfoNCE; ZSC = expected cross-entropy of the
/// root-posterior classifier against the exact class posterior; CDM =
/// per-coordinate squared error; VLM = summed next-token cross-entropy;
/// diffusion = TV of the rounded sample law.
MisspecResult misspec_bp_eval(const JghmModel& train, const JghmModel& test, Task task,
                              const EvalParams& params);

}  // namespace jghm
