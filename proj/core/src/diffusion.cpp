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

#include "jghm/diffusion.hpp"

#include <cmath>
#include <string>

#include "jghm/bp.hpp"
#include "jghm/oracle.hpp"
#include "jghm/parallel.hpp"
#include "jghm/rng.hpp"
#include "jghm/score.hpp"

namespace jghm {

std::size_t SdeConfig::steps() const {
  if (!(horizon > 0.0) || !(dt > 0.0)) throw InvariantError("SdeConfig: horizon and dt must be positive");
  if (n < 1) throw InvariantError("SdeConfig: need at least one trajectory");
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 || rounded < 1.0) {
    throw InvariantError("SdeConfig: horizon / dt must be an integer");
  }
  return static_cast<std::size_t>(rounded);
}

std::vector<std::vector<double>> sample_image_sde(const JghmModel& model, std::span<const int> x_tx,
                                                  const SdeConfig& cfg, const JghmModel* drift_model) {
  const std::size_t steps = cfg.steps();
  const JghmModel& dm = drift_model ? *drift_model : model;
  if (!(dm.topology == model.topology)) throw InvariantError("sample_image_sde: drift model topology differs");
  const std::size_t d = model.topology.leaf_count(Modality::kImage);
  Belief context;
  if (cfg.drift == DriftSource::kExact) context = root_log_posterior(dm, Modality::kText, x_tx);
  const double sq = std::sqrt(cfg.dt);

  return parallel_map<std::vector<double>>(cfg.n, [&](std::size_t k) {
    rng::Stream stream(cfg.seed, rng::Purpose::kDiffusion, k);
    NoisyImage y{0.0, std::vector<double>(d, 0.0)};
    for (std::size_t j = 0; j < steps; ++j) {
      y.t = static_cast<double>(j) * cfg.dt;
      std::vector<double> drift(d, 0.0);
      if (cfg.drift == DriftSource::kExact) drift = denoiser_with_context(dm, y, context);
      for (std::size_t v = 0; v < d; ++v) {
        y.z[v] += drift[v] * cfg.dt + sq * stream.normal();
        if (!std::isfinite(y.z[v])) {
          throw InvariantError("sample_image_sde: non-finite state at step " + std::to_string(j) +
                               " of trajectory " + std::to_string(k));
        }
      }
    }
    for (double& v : y.z) v /= cfg.horizon;
    return y.z;
  });
}

int round_to_state(double value, int states) {
  // ceil(v - 1/2) sends exact halves down.
  const double r = std::ceil(value - 0.5);
  if (r < 1.0) return 0;
  if (r > states) return states - 1;
  return static_cast<int>(r) - 1;
}

std::vector<std::vector<int>> round_to_states(const std::vector<std::vector<double>>& samples,
                                              int states) {
  std::vector<std::vector<int>> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[i].resize(samples[i].size());
    for (std::size_t v = 0; v < samples[i].size(); ++v) out[i][v] = round_to_state(samples[i][v], states);
  }
  return out;
}

std::vector<double> empirical_law(const std::vector<std::vector<int>>& images, int states) {
  if (images.empty()) throw InvariantError("empirical_law: no samples");
  std::size_t count = 1;
  for (std::size_t v = 0; v < images.front().size(); ++v) count *= static_cast<std::size_t>(states);
  std::vector<double> law(count, 0.0);
  for (const auto& x : images) law[configuration_index(x, states)] += 1.0;
  for (double& p : law) p /= static_cast<double>(images.size());
  return law;
}

namespace {

double total_variation(std::span<const double> p, std::span<const double> q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace

RiskReport sampled_law_distance(const JghmModel& model, std::span<const int> x_tx,
                                const SdeConfig& cfg, const JghmModel* drift_model,
                                std::size_t bootstrap) {
  const oracle::JointTable table = oracle::enumerate_joint(model);
  const std::vector<double> target = oracle::image_given_text(table, x_tx);
  const auto samples = round_to_states(sample_image_sde(model, x_tx, cfg, drift_model), model.states());
  const std::vector<double> law = empirical_law(samples, model.states());

  RiskReport r;
  r.name = "diffusion_tv";
  r.estimate = total_variation(law, target);
  r.n = samples.size();
  r.meta.seed = cfg.seed;
  if (drift_model && drift_model->metadata) r.meta.p_flip_train = drift_model->metadata->p_flip;
  else if (model.metadata) r.meta.p_flip_train = model.metadata->p_flip;
  if (model.metadata) r.meta.p_flip_test = model.metadata->p_flip;

  if (bootstrap > 1) {
    std::vector<std::size_t> index(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) index[i] = configuration_index(samples[i], model.states());
    const auto tvs = parallel_map<double>(bootstrap, [&](std::size_t b) {
      rng::Stream stream(cfg.seed, rng::Purpose::kBootstrap, b);
      std::vector<double> resampled(law.size(), 0.0);
      for (std::size_t i = 0; i < index.size(); ++i) resampled[index[stream.uniform_index(index.size())]] += 1.0;
      for (double& p : resampled) p /= static_cast<double>(index.size());
      return total_variation(resampled, target);
    });
    r.se = mean_and_se(tvs).se * std::sqrt(static_cast<double>(bootstrap));
  }
  return r;
}

}  // namespace jghm
