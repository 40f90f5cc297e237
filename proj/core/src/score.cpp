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

#include "jghm/score.hpp"

#include <algorithm>
#include <cmath>

#include "jghm/belief.hpp"
#include "jghm/bp.hpp"

namespace jghm {

std::size_t configuration_index(std::span<const int> leaves, int states) {
  std::size_t index = 0;
  for (int x : leaves) index = index * static_cast<std::size_t>(states) + static_cast<std::size_t>(x);
  return index;
}

std::vector<int> configuration_from_index(std::size_t index, std::size_t length, int states) {
  std::vector<int> leaves(length);
  for (std::size_t i = length; i-- > 0;) {
    leaves[i] = static_cast<int>(index % static_cast<std::size_t>(states));
    index /= static_cast<std::size_t>(states);
  }
  return leaves;
}

std::vector<double> OptimalScore::embed_image(std::span<const int> x_im) const {
  return root_posterior(model_, Modality::kImage, x_im);
}

std::vector<double> OptimalScore::embed_text(std::span<const int> x_tx) const {
  return root_posterior(model_, Modality::kText, x_tx);
}

double OptimalScore::link(std::span<const double> e_im, std::span<const double> e_tx) const {
  double s = score_from_posteriors(model_.root_prior, e_im, e_tx);
  if (clamp_) s = std::clamp(s, -*clamp_, *clamp_);
  return s;
}

CoarsenedScore::CoarsenedScore(JghmModel model, int merge_a, int merge_b) : model_(std::move(model)) {
  const int S = model_.states();
  if (merge_a == merge_b || std::min(merge_a, merge_b) < 0 || std::max(merge_a, merge_b) >= S) {
    throw InvariantError("CoarsenedScore: need two distinct states");
  }
  const int low = std::min(merge_a, merge_b);
  const int high = std::max(merge_a, merge_b);
  groups_.assign(S, -1);
  int next = 0;
  for (int s = 0; s < S; ++s) groups_[s] = s == high ? groups_[low] : next++;
  group_prior_.assign(next, 0.0);
  for (int s = 0; s < S; ++s) group_prior_[groups_[s]] += model_.root_prior[s];
}

std::vector<double> CoarsenedScore::embed_image(std::span<const int> x_im) const {
  const auto p = root_posterior(model_, Modality::kImage, x_im);
  std::vector<double> merged(group_prior_.size(), 0.0);
  for (std::size_t s = 0; s < p.size(); ++s) merged[groups_[s]] += p[s];
  return merged;
}

std::vector<double> CoarsenedScore::embed_text(std::span<const int> x_tx) const {
  const auto p = root_posterior(model_, Modality::kText, x_tx);
  std::vector<double> merged(group_prior_.size(), 0.0);
  for (std::size_t s = 0; s < p.size(); ++s) merged[groups_[s]] += p[s];
  return merged;
}

double CoarsenedScore::link(std::span<const double> e_im, std::span<const double> e_tx) const {
  return score_from_posteriors(group_prior_, e_im, e_tx);
}

std::vector<double> LeafScore::embed_image(std::span<const int> x_im) const {
  return {x_im.begin(), x_im.end()};
}

std::vector<double> LeafScore::embed_text(std::span<const int> x_tx) const {
  return {x_tx.begin(), x_tx.end()};
}

double LeafScore::link(std::span<const double> e_im, std::span<const double> e_tx) const {
  std::vector<int> x_im(e_im.size());
  std::vector<int> x_tx(e_tx.size());
  for (std::size_t i = 0; i < e_im.size(); ++i) x_im[i] = static_cast<int>(e_im[i]);
  for (std::size_t i = 0; i < e_tx.size(); ++i) x_tx[i] = static_cast<int>(e_tx[i]);
  return fn_(x_im, x_tx);
}

bool CachedScore::fits(const TreeTopology& topology, std::size_t limit) {
  for (Modality m : {Modality::kImage, Modality::kText}) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < topology.leaf_count(m); ++i) {
      count *= static_cast<std::size_t>(topology.states);
      if (count > limit) return false;
    }
  }
  return true;
}

CachedScore::CachedScore(std::shared_ptr<const ScoreFunction> base, const TreeTopology& topology)
    : base_(std::move(base)), states_(topology.states) {
  if (!fits(topology)) throw InvariantError("CachedScore: leaf space too large to memoize");
  auto fill = [&](Modality m, std::vector<std::vector<double>>& cache) {
    const std::size_t d = topology.leaf_count(m);
    std::size_t count = 1;
    for (std::size_t i = 0; i < d; ++i) count *= static_cast<std::size_t>(states_);
    cache.resize(count);
    for (std::size_t c = 0; c < count; ++c) {
      const auto leaves = configuration_from_index(c, d, states_);
      // Off-support configurations have no posterior; left empty, they
      // fall through to the base score on lookup.
      try {
        cache[c] = m == Modality::kImage ? base_->embed_image(leaves) : base_->embed_text(leaves);
      } catch (const InvariantError&) {
        cache[c].clear();
      }
    }
  };
  fill(Modality::kImage, image_cache_);
  fill(Modality::kText, text_cache_);
}

std::vector<double> CachedScore::embed_image(std::span<const int> x_im) const {
  const auto& e = image_cache_.at(configuration_index(x_im, states_));
  return e.empty() ? base_->embed_image(x_im) : e;
}

std::vector<double> CachedScore::embed_text(std::span<const int> x_tx) const {
  const auto& e = text_cache_.at(configuration_index(x_tx, states_));
  return e.empty() ? base_->embed_text(x_tx) : e;
}

std::shared_ptr<const ScoreFunction> maybe_cached(std::shared_ptr<const ScoreFunction> base,
                                                  const TreeTopology& topology) {
  if (!CachedScore::fits(topology)) return base;
  return std::make_shared<CachedScore>(std::move(base), topology);
}

}  // namespace jghm
