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

#include "jghm/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "jghm/bp.hpp"

namespace jghm {

std::vector<double> Encoder::quantized(std::span<const int> leaves) const {
  std::vector<double> out = encode(leaves);
  const double scale = std::pow(10.0, precision_digits_);
  for (double& v : out) {
    v = std::round(v * scale) / scale;
    if (v == 0.0) v = 0.0;  // fold -0 into +0
  }
  return out;
}

std::vector<double> CanonicalEncoder::encode(std::span<const int> leaves) const {
  std::vector<double> p = root_posterior(model_, modality_, leaves);
  for (std::size_t s = 0; s < p.size(); ++s) p[s] /= model_.root_prior[s];
  return p;
}

CoarsenedRootEncoder::CoarsenedRootEncoder(JghmModel model, Modality m, int merge_a, int merge_b)
    : model_(std::move(model)), modality_(m) {
  const int S = model_.states();
  if (merge_a == merge_b || merge_a < 0 || merge_b < 0 || merge_a >= S || merge_b >= S) {
    throw InvariantError("CoarsenedRootEncoder: need two distinct states");
  }
  groups_.assign(S, -1);
  const int low = std::min(merge_a, merge_b);
  const int high = std::max(merge_a, merge_b);
  int next = 0;
  for (int s = 0; s < S; ++s) {
    if (s == high) {
      groups_[s] = groups_[low];
    } else {
      groups_[s] = next++;
    }
  }
  group_count_ = next;
  set_precision_digits(kDefaultDigits);
}

std::vector<double> CoarsenedRootEncoder::encode(std::span<const int> leaves) const {
  const std::vector<double> p = root_posterior(model_, modality_, leaves);
  std::vector<double> merged(group_count_, 0.0);
  for (std::size_t s = 0; s < p.size(); ++s) merged[groups_[s]] += p[s];
  return merged;
}

std::vector<double> PrefixEncoder::encode(std::span<const int> leaves) const {
  const std::size_t n = std::min(keep_, leaves.size());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(leaves[i] + 1);
  if (out.empty()) out.push_back(0.0);
  return out;
}

std::unique_ptr<Encoder> canonical_encoder(const JghmModel& model, Modality m) {
  return std::make_unique<CanonicalEncoder>(model, m);
}

std::vector<std::unique_ptr<Encoder>> lossy_reference_encoders(const JghmModel& model, Modality m) {
  std::vector<std::unique_ptr<Encoder>> out;
  out.push_back(std::make_unique<CoarsenedRootEncoder>(model, m));
  out.push_back(std::make_unique<ConstantEncoder>(m));
  out.push_back(std::make_unique<PrefixEncoder>(m, model.topology.leaf_count(m) / 2));
  return out;
}

}  // namespace jghm
