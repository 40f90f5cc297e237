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

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jghm/model.hpp"

namespace jghm {

/// Similarity score S(x_im, x_tx) = link(embed_image(x_im), embed_text(x_tx)).
///
/// Splitting the score into embeddings and a link lets batch evaluators embed
/// each sample once and score all K x K pairings from the embeddings.
class ScoreFunction {
 public:
  virtual ~ScoreFunction() = default;

  virtual std::vector<double> embed_image(std::span<const int> x_im) const = 0;
  virtual std::vector<double> embed_text(std::span<const int> x_tx) const = 0;
  virtual double link(std::span<const double> e_im, std::span<const double> e_tx) const = 0;
  virtual std::string name() const = 0;
  /// True when the score ignores its inputs entirely.
  virtual bool is_constant() const { return false; }

  double operator()(std::span<const int> x_im, std::span<const int> x_tx) const {
    return link(embed_image(x_im), embed_text(x_tx));
  }
};

/// The pointwise mutual information computed by message passing, optionally
/// clamped to [-clamp, clamp].
class OptimalScore final : public ScoreFunction {
 public:
  explicit OptimalScore(JghmModel model, std::optional<double> clamp = std::nullopt)
      : model_(std::move(model)), clamp_(clamp) {}

  std::vector<double> embed_image(std::span<const int> x_im) const override;
  std::vector<double> embed_text(std::span<const int> x_tx) const override;
  double link(std::span<const double> e_im, std::span<const double> e_tx) const override;
  std::string name() const override { return "optimal"; }

  const JghmModel& model() const { return model_; }

 private:
  JghmModel model_;
  std::optional<double> clamp_;
};

/// log sum_g P(g | x_im) P(g | x_tx) / P(g) over the groups of a coarsening
/// that merges two root states.
class CoarsenedScore final : public ScoreFunction {
 public:
  CoarsenedScore(JghmModel model, int merge_a = 0, int merge_b = 1);

  std::vector<double> embed_image(std::span<const int> x_im) const override;
  std::vector<double> embed_text(std::span<const int> x_tx) const override;
  double link(std::span<const double> e_im, std::span<const double> e_tx) const override;
  std::string name() const override { return "coarsened"; }

 private:
  JghmModel model_;
  std::vector<int> groups_;
  std::vector<double> group_prior_;
};

class ConstantScore final : public ScoreFunction {
 public:
  explicit ConstantScore(double value = 0.0) : value_(value) {}

  std::vector<double> embed_image(std::span<const int>) const override { return {}; }
  std::vector<double> embed_text(std::span<const int>) const override { return {}; }
  double link(std::span<const double>, std::span<const double>) const override { return value_; }
  std::string name() const override { return "constant"; }
  bool is_constant() const override { return true; }

 private:
  double value_;
};

/// Arbitrary score over raw leaves; embeddings are the leaves themselves.
class LeafScore final : public ScoreFunction {
 public:
  using Fn = std::function<double(std::span<const int>, std::span<const int>)>;

  LeafScore(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  std::vector<double> embed_image(std::span<const int> x_im) const override;
  std::vector<double> embed_text(std::span<const int> x_tx) const override;
  double link(std::span<const double> e_im, std::span<const double> e_tx) const override;
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
};

/// Memoizes the embeddings of a base score over every leaf configuration.
/// Only usable when S^d is small; `fits` tells whether it is.
class CachedScore final : public ScoreFunction {
 public:
  static bool fits(const TreeTopology& topology, std::size_t limit = 1u << 16);

  CachedScore(std::shared_ptr<const ScoreFunction> base, const TreeTopology& topology);

  std::vector<double> embed_image(std::span<const int> x_im) const override;
  std::vector<double> embed_text(std::span<const int> x_tx) const override;
  double link(std::span<const double> e_im, std::span<const double> e_tx) const override {
    return base_->link(e_im, e_tx);
  }
  std::string name() const override { return base_->name(); }
  bool is_constant() const override { return base_->is_constant(); }

 private:
  std::shared_ptr<const ScoreFunction> base_;
  int states_;
  std::vector<std::vector<double>> image_cache_;
  std::vector<std::vector<double>> text_cache_;
};

/// Wraps `base` in a CachedScore when the leaf spaces are small enough.
std::shared_ptr<const ScoreFunction> maybe_cached(std::shared_ptr<const ScoreFunction> base,
                                                  const TreeTopology& topology);

/// Index of a leaf configuration in lexicographic order (leaf 0 most significant).
std::size_t configuration_index(std::span<const int> leaves, int states);
/// Inverse of configuration_index.
std::vector<int> configuration_from_index(std::size_t index, std::size_t length, int states);

}  // namespace jghm
