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

#include "jghm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "jghm/rng.hpp"

namespace jghm {

const char* modality_name(Modality m) { return m == Modality::kImage ? "image" : "text"; }

std::size_t TreeTopology::nodes_at_level(Modality m, int level) const {
  std::size_t n = 1;
  const auto& b = branching(m);
  for (int l = 1; l <= level; ++l) n *= static_cast<std::size_t>(b[l - 1]);
  return n;
}

std::size_t TreeTopology::total_nodes() const {
  std::size_t n = 1;
  for (Modality m : {Modality::kImage, Modality::kText}) {
    for (int l = 1; l <= depth; ++l) n += nodes_at_level(m, l);
  }
  return n;
}

int TreeTopology::max_first_branching() const {
  return std::max(branching_im.at(0), branching_tx.at(0));
}

void TreeTopology::check() const {
  if (depth < 1) throw InvariantError("topology: depth must be >= 1");
  if (states < 2) throw InvariantError("topology: state count must be >= 2");
  for (Modality m : {Modality::kImage, Modality::kText}) {
    const auto& b = branching(m);
    if (b.size() != static_cast<std::size_t>(depth)) {
      throw InvariantError(std::string("topology: ") + modality_name(m) +
                           " branching list length differs from depth");
    }
    for (int v : b) {
      if (v < 1) {
        throw InvariantError(std::string("topology: ") + modality_name(m) +
                             " branching factor must be >= 1");
      }
    }
  }
}

TransitionKernel::TransitionKernel(int states)
    : states_(states), values_(static_cast<std::size_t>(states) * states, 0.0) {}

TransitionKernel::TransitionKernel(int states, std::vector<double> row_major)
    : states_(states), values_(std::move(row_major)) {
  if (values_.size() != static_cast<std::size_t>(states) * states) {
    throw InvariantError("kernel: expected S*S entries");
  }
}

TransitionKernel TransitionKernel::uniform(int states) {
  return TransitionKernel(states,
                          std::vector<double>(static_cast<std::size_t>(states) * states,
                                              1.0 / states));
}

TransitionKernel TransitionKernel::identity(int states) {
  TransitionKernel k(states);
  for (int s = 0; s < states; ++s) k.at(s, s) = 1.0;
  return k;
}

JghmModel make_constant_model(const TreeTopology& topology, const TransitionKernel& kernel) {
  topology.check();
  JghmModel model;
  model.topology = topology;
  model.root_prior.assign(topology.states, 1.0 / topology.states);
  for (Modality m : {Modality::kImage, Modality::kText}) {
    auto& ks = m == Modality::kImage ? model.kernels_im : model.kernels_tx;
    ks.resize(topology.depth);
    for (int l = 1; l <= topology.depth; ++l) {
      ks[l - 1].assign(topology.branching(m, l), kernel);
    }
  }
  return model;
}

namespace {

void widen_bound(double v, double& bound) {
  if (v <= 0.0) {
    bound = std::numeric_limits<double>::infinity();
    return;
  }
  bound = std::max({bound, v, 1.0 / v});
}

}  // namespace

ValidationReport validate_model(const JghmModel& model) {
  ValidationReport report;
  try {
    model.topology.check();
  } catch (const InvariantError& e) {
    report.errors.emplace_back(e.what());
    return report;
  }
  const int S = model.states();
  constexpr double kRowTolerance = 1e-12;
  double bound = 1.0;
  bool has_zero = false;

  if (model.root_prior.size() != static_cast<std::size_t>(S)) {
    report.errors.emplace_back("root_prior: length differs from state count");
  } else {
    double total = 0.0;
    for (double p : model.root_prior) {
      if (!(p > 0.0)) report.errors.emplace_back("root_prior: entries must be > 0");
      total += p;
      widen_bound(p, bound);
    }
    if (std::abs(total - 1.0) > kRowTolerance) {
      report.errors.emplace_back("root_prior: does not sum to 1");
    }
  }

  for (Modality m : {Modality::kImage, Modality::kText}) {
    const auto& ks = model.kernels(m);
    const std::string tag = std::string("kernels_") + (m == Modality::kImage ? "im" : "tx");
    if (ks.size() != static_cast<std::size_t>(model.topology.depth)) {
      report.errors.emplace_back(tag + ": level count differs from depth");
      continue;
    }
    for (int l = 1; l <= model.topology.depth; ++l) {
      const auto& per_level = ks[l - 1];
      if (per_level.size() != static_cast<std::size_t>(model.topology.branching(m, l))) {
        std::ostringstream os;
        os << tag << ": level " << l << " has " << per_level.size()
           << " kernels, expected " << model.topology.branching(m, l);
        report.errors.push_back(os.str());
        continue;
      }
      for (std::size_t r = 0; r < per_level.size(); ++r) {
        const auto& k = per_level[r];
        std::ostringstream where;
        where << tag << "[" << l << "][" << r + 1 << "]";
        if (k.states() != S || k.values().size() != static_cast<std::size_t>(S) * S) {
          report.errors.push_back(where.str() + ": shape mismatch");
          continue;
        }
        for (int s = 0; s < S; ++s) {
          double row_total = 0.0;
          for (int a = 0; a < S; ++a) {
            const double v = k(s, a);
            if (!std::isfinite(v)) {
              report.errors.push_back(where.str() + ": non-finite entry");
            } else if (v < 0.0) {
              report.errors.push_back(where.str() + ": negative entry");
            } else if (v == 0.0) {
              has_zero = true;
            }
            row_total += v;
            widen_bound(v, bound);
          }
          if (std::abs(row_total - 1.0) > kRowTolerance) {
            std::ostringstream os;
            os << where.str() << ": row " << s + 1 << " sums to " << row_total
               << " (row-sum violation)";
            report.errors.push_back(os.str());
          }
        }
      }
    }
  }
  if (has_zero) report.warnings.emplace_back("B_psi = inf (kernel has zero entries)");
  report.b_psi = bound;
  return report;
}

double require_valid(const JghmModel& model) {
  ValidationReport report = validate_model(model);
  if (!report.ok()) {
    std::string msg = "invalid model:";
    for (const auto& e : report.errors) msg += "\n  " + e;
    throw InvariantError(msg);
  }
  return report.b_psi;
}

double effective_b_psi(const JghmModel& model) { return validate_model(model).b_psi; }

std::size_t leaf_index(const TreeTopology& topology, Modality m, std::span<const int> rank_path) {
  if (rank_path.size() != static_cast<std::size_t>(topology.depth)) {
    throw InvariantError("leaf_index: rank path length differs from depth");
  }
  std::size_t index = 0;
  for (int l = 1; l <= topology.depth; ++l) {
    const int rank = rank_path[l - 1];
    const int width = topology.branching(m, l);
    if (rank < 1 || rank > width) throw InvariantError("leaf_index: rank out of range");
    index = index * static_cast<std::size_t>(width) + static_cast<std::size_t>(rank - 1);
  }
  return index + 1;
}

std::vector<int> rank_path(const TreeTopology& topology, Modality m, std::size_t leaf_number) {
  if (leaf_number < 1 || leaf_number > topology.leaf_count(m)) {
    throw InvariantError("rank_path: leaf number out of range");
  }
  std::vector<int> path(topology.depth);
  std::size_t rest = leaf_number - 1;
  for (int l = topology.depth; l >= 1; --l) {
    const auto width = static_cast<std::size_t>(topology.branching(m, l));
    path[l - 1] = static_cast<int>(rest % width) + 1;
    rest /= width;
  }
  return path;
}

PflipComponents pflip_components(const ModelGenSpec& spec, Modality m, int level, int rank) {
  const int S = spec.topology.states;
  const auto mod_tag = static_cast<std::uint64_t>(m == Modality::kImage ? 0 : 1);
  PflipComponents c;

  rng::Stream perm_stream(rng::derive_key({spec.seed,
                                           static_cast<std::uint64_t>(rng::Purpose::kModelPermutation),
                                           mod_tag, static_cast<std::uint64_t>(level),
                                           static_cast<std::uint64_t>(rank)}));
  c.permutation.resize(S);
  std::iota(c.permutation.begin(), c.permutation.end(), 0);
  // Fisher-Yates written out so the permutation is identical on every platform.
  for (int i = S - 1; i > 0; --i) {
    const auto j = static_cast<int>(perm_stream.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(c.permutation[i], c.permutation[j]);
  }

  rng::Stream gauss_stream(rng::derive_key({spec.seed,
                                            static_cast<std::uint64_t>(rng::Purpose::kModelGaussian),
                                            mod_tag, static_cast<std::uint64_t>(level),
                                            static_cast<std::uint64_t>(rank)}));
  c.softmax_gaussian = TransitionKernel(S);
  std::vector<double> row(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < S; ++a) row[a] = spec.gaussian_scale * gauss_stream.normal();
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (int a = 0; a < S; ++a) c.softmax_gaussian.at(s, a) = row[a] / total;
  }
  return c;
}

JghmModel make_pflip_model(const ModelGenSpec& spec) {
  spec.topology.check();
  if (!(spec.p_flip >= 0.0 && spec.p_flip <= 1.0)) {
    throw InvariantError("make_pflip_model: p_flip must lie in [0, 1]");
  }
  const int S = spec.topology.states;
  JghmModel model;
  model.topology = spec.topology;
  model.root_prior.assign(S, 1.0 / S);
  model.metadata = ModelMetadata{spec.p_flip, spec.seed, spec.gaussian_scale};
  for (Modality m : {Modality::kImage, Modality::kText}) {
    auto& ks = m == Modality::kImage ? model.kernels_im : model.kernels_tx;
    ks.resize(spec.topology.depth);
    for (int l = 1; l <= spec.topology.depth; ++l) {
      const int width = spec.topology.branching(m, l);
      ks[l - 1].reserve(width);
      for (int r = 0; r < width; ++r) {
        const PflipComponents c = pflip_components(spec, m, l, r);
        TransitionKernel k(S);
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < S; ++a) {
            const double perm = c.permutation[s] == a ? 1.0 : 0.0;
            k.at(s, a) = (1.0 - spec.p_flip) * perm + spec.p_flip * c.softmax_gaussian(s, a);
          }
        }
        ks[l - 1].push_back(std::move(k));
      }
    }
  }
  return model;
}

}  // namespace jghm
