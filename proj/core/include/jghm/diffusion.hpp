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
#include <span>
#include <vector>

#include "jghm/metrics.hpp"
#include "jghm/model.hpp"

namespace jghm {

enum class DriftSource {
  kExact,  // message-passing denoiser of the sampling model
  kZero,   // pure Brownian motion (test hook)
};

struct SdeConfig {
  double horizon = 20.0;
  double dt = 0.01;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  DriftSource drift = DriftSource::kExact;

  /// Number of Euler steps; throws InvariantError unless horizon / dt is an
  /// integer within 1e-9 and n >= 1.
  std::size_t steps() const;
};

/// Euler-Maruyama for dY = m(Y_t, t) dt + dW with Y_0 = 0, the drift
/// evaluated at the left endpoint. Returns Y_T / T per trajectory.
/// `drift_model` supplies the denoiser; it defaults to `model`.
std::vector<std::vector<double>> sample_image_sde(const JghmModel& model, std::span<const int> x_tx,
                                                  const SdeConfig& cfg,
                                                  const JghmModel* drift_model = nullptr);

/// Nearest state in 1..S (returned 0-based), ties to the lower state,
/// clamped at both ends.
int round_to_state(double value, int states);
std::vector<std::vector<int>> round_to_states(const std::vector<std::vector<double>>& samples,
                                              int states);

/// Histogram over image configurations (lexicographic index), normalized.
std::vector<double> empirical_law(const std::vector<std::vector<int>>& images, int states);

/// Total-variation distance between the rounded sample law and P(x_im | x_tx)
/// under `model`, with a bootstrap standard error.
RiskReport sampled_law_distance(const JghmModel& model, std::span<const int> x_tx,
                                const SdeConfig& cfg, const JghmModel* drift_model = nullptr,
                                std::size_t bootstrap = 200);

}  // namespace jghm
