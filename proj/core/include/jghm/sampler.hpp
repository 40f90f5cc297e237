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

#include <span>
#include <vector>

#include "jghm/model.hpp"
#include "jghm/rng.hpp"

namespace jghm {

/// One ancestral draw. levels_im[l - 1] holds the level-l states of the image
/// tree (l = 1..depth); the last entry is the image itself.
struct Sample {
  int root = 0;
  std::vector<std::vector<int>> levels_im;
  std::vector<std::vector<int>> levels_tx;

  const std::vector<int>& image() const { return levels_im.back(); }
  const std::vector<int>& text() const { return levels_tx.back(); }
  const std::vector<std::vector<int>>& levels(Modality m) const {
    return m == Modality::kImage ? levels_im : levels_tx;
  }
};

/// Entry 0 is the paired sample; entries 1..K-1 are product-of-marginals
/// negatives.
struct ContrastiveBatch {
  std::vector<std::vector<int>> images;
  std::vector<std::vector<int>> texts;

  std::size_t size() const { return images.size(); }
};

/// z = t * x + sqrt(t) * g for a (0-based) image x read as states 1..S.
struct NoisyImage {
  double t = 0.0;
  std::vector<double> z;
};

Sample sample_joint(const JghmModel& model, rng::Stream& stream);

/// States of one tree given its root state; levels[l - 1] as in Sample.
std::vector<std::vector<int>> sample_tree(const JghmModel& model, Modality m, int root,
                                          rng::Stream& stream);

ContrastiveBatch sample_contrastive_batch(const JghmModel& model, int K, rng::Stream& stream);

NoisyImage noise_image(std::span<const int> image, double t, rng::Stream& stream);

/// Deterministic variant with an explicit Gaussian vector (test hook).
NoisyImage noise_image(std::span<const int> image, double t, std::span<const double> gaussian);

/// Text leaves sampled with the root clamped to class y (0-based).
std::vector<int> sample_text_for_class(const JghmModel& model, int y, rng::Stream& stream);

}  // namespace jghm
