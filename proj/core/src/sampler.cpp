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

#include "jghm/sampler.hpp"

#include <cmath>

namespace jghm {

std::vector<std::vector<int>> sample_tree(const JghmModel& model, Modality m, int root,
                                          rng::Stream& stream) {
  const auto& topo = model.topology;
  std::vector<std::vector<int>> levels(topo.depth);
  const std::vector<int> root_level{root};
  const std::vector<int>* parents = &root_level;
  for (int l = 1; l <= topo.depth; ++l) {
    const auto width = static_cast<std::size_t>(topo.branching(m, l));
    auto& current = levels[l - 1];
    current.resize(parents->size() * width);
    for (std::size_t j = 0; j < current.size(); ++j) {
      const int parent_state = (*parents)[j / width];
      current[j] = stream.categorical(model.kernel_for(m, l, j).row(parent_state));
    }
    parents = &current;
  }
  return levels;
}

Sample sample_joint(const JghmModel& model, rng::Stream& stream) {
  Sample s;
  s.root = stream.categorical(model.root_prior);
  s.levels_im = sample_tree(model, Modality::kImage, s.root, stream);
  s.levels_tx = sample_tree(model, Modality::kText, s.root, stream);
  return s;
}

ContrastiveBatch sample_contrastive_batch(const JghmModel& model, int K, rng::Stream& stream) {
  if (K < 2) throw InvariantError("sample_contrastive_batch: K must be >= 2");
  ContrastiveBatch batch;
  batch.images.reserve(K);
  batch.texts.reserve(K);
  Sample positive = sample_joint(model, stream);
  batch.images.push_back(positive.image());
  batch.texts.push_back(positive.text());
  for (int j = 1; j < K; ++j) {
    Sample a = sample_joint(model, stream);
    Sample b = sample_joint(model, stream);
    batch.images.push_back(a.image());
    batch.texts.push_back(b.text());
  }
  return batch;
}

NoisyImage noise_image(std::span<const int> image, double t, std::span<const double> gaussian) {
  if (!(t >= 0.0)) throw InvariantError("noise_image: t must be >= 0");
  if (gaussian.size() != image.size()) throw InvariantError("noise_image: size mismatch");
  NoisyImage out{t, std::vector<double>(image.size())};
  const double scale = std::sqrt(t);
  for (std::size_t v = 0; v < image.size(); ++v) {
    out.z[v] = t * static_cast<double>(image[v] + 1) + scale * gaussian[v];
  }
  return out;
}

NoisyImage noise_image(std::span<const int> image, double t, rng::Stream& stream) {
  if (!(t >= 0.0)) throw InvariantError("noise_image: t must be >= 0");
  std::vector<double> g(image.size());
  for (double& v : g) v = stream.normal();
  return noise_image(image, t, g);
}

std::vector<int> sample_text_for_class(const JghmModel& model, int y, rng::Stream& stream) {
  if (y < 0 || y >= model.states()) throw InvariantError("sample_text_for_class: class out of range");
  return sample_tree(model, Modality::kText, y, stream).back();
}

}  // namespace jghm
