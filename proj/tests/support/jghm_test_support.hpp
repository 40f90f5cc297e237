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

// Fixtures and a naive reference joint shared by the unit and acceptance
// tests. The naive joint walks every assignment of the whole graph at once
// and shares no code with the library's per-root enumeration.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "jghm/model.hpp"
#include "jghm/sampler.hpp"
#include "jghm/score.hpp"

namespace jghm::testing {

inline TreeTopology tiny_topology() {
  TreeTopology t;
  t.depth = 2;
  t.branching_im = {2, 2};
  t.branching_tx = {2, 2};
  t.states = 3;
  return t;
}

inline JghmModel pflip_model(const TreeTopology& topology, double p_flip, std::uint64_t seed) {
  ModelGenSpec spec;
  spec.topology = topology;
  spec.p_flip = p_flip;
  spec.seed = seed;
  return make_pflip_model(spec);
}

// Reference tiny model for the Monte-Carlo limit checks. A small p_flip
// keeps the gap between the class posterior and its zero-shot limit small.
inline JghmModel reference_model() { return pflip_model(tiny_topology(), 0.04, 1); }

// Two-leaf image and text trees with binary states, used by the SDE checks.
inline TreeTopology diffusion_topology() {
  TreeTopology t;
  t.depth = 1;
  t.branching_im = {2};
  t.branching_tx = {2};
  t.states = 2;
  return t;
}

struct NaiveJoint {
  std::size_t n_im = 0;
  std::size_t n_tx = 0;
  int states = 0;
  std::vector<double> p;        // [x * n_tx + y]
  std::vector<double> by_root;  // [(r * n_im + x) * n_tx + y]
  double operator()(std::size_t x, std::size_t y) const { return p[x * n_tx + y]; }
  std::vector<double> marginal_im() const {
    std::vector<double> m(n_im, 0.0);
    for (std::size_t x = 0; x < n_im; ++x)
      for (std::size_t y = 0; y < n_tx; ++y) m[x] += (*this)(x, y);
    return m;
  }
  std::vector<double> marginal_tx() const {
    std::vector<double> m(n_tx, 0.0);
    for (std::size_t x = 0; x < n_im; ++x)
      for (std::size_t y = 0; y < n_tx; ++y) m[y] += (*this)(x, y);
    return m;
  }
};

namespace detail {

struct Node {
  int parent;  // index into the flat node list, -1 for the root
  Modality modality;
  int level;
  std::size_t position;
};

inline std::vector<Node> flat_nodes(const TreeTopology& t, std::vector<int>& leaves_im,
                                    std::vector<int>& leaves_tx) {
  std::vector<Node> nodes{{-1, Modality::kImage, 0, 0}};
  for (Modality m : {Modality::kImage, Modality::kText}) {
    std::vector<int> previous{0};
    for (int l = 1; l <= t.depth; ++l) {
      std::vector<int> current;
      const int b = t.branching(m, l);
      for (std::size_t j = 0; j < previous.size() * b; ++j) {
        current.push_back(static_cast<int>(nodes.size()));
        nodes.push_back({previous[j / b], m, l, j});
      }
      previous = current;
    }
    (m == Modality::kImage ? leaves_im : leaves_tx) = previous;
  }
  return nodes;
}

}  // namespace detail

// Sums the product of every factor over all S^(node count) assignments.
inline NaiveJoint naive_joint(const JghmModel& model) {
  const TreeTopology& t = model.topology;
  const int S = t.states;
  std::vector<int> leaves_im, leaves_tx;
  const auto nodes = detail::flat_nodes(t, leaves_im, leaves_tx);

  NaiveJoint out;
  out.n_im = static_cast<std::size_t>(std::llround(std::pow(S, leaves_im.size())));
  out.n_tx = static_cast<std::size_t>(std::llround(std::pow(S, leaves_tx.size())));
  out.states = S;
  out.p.assign(out.n_im * out.n_tx, 0.0);
  out.by_root.assign(S * out.n_im * out.n_tx, 0.0);

  std::vector<int> state(nodes.size(), 0);
  while (true) {
    double w = model.root_prior[state[0]];
    for (std::size_t k = 1; k < nodes.size() && w > 0.0; ++k) {
      const auto& nd = nodes[k];
      const auto& kernel = model.kernels(nd.modality)[nd.level - 1][nd.position % t.branching(nd.modality, nd.level)];
      w *= kernel(state[nd.parent], state[k]);
    }
    std::size_t x = 0, y = 0;
    for (int v : leaves_im) x = x * S + state[v];
    for (int v : leaves_tx) y = y * S + state[v];
    out.p[x * out.n_tx + y] += w;
    out.by_root[(state[0] * out.n_im + x) * out.n_tx + y] += w;

    std::size_t k = 0;
    while (k < state.size() && ++state[k] == S) state[k++] = 0;
    if (k == state.size()) break;
  }
  return out;
}

inline double naive_mutual_information(const NaiveJoint& j) {
  const auto pi = j.marginal_im();
  const auto pt = j.marginal_tx();
  double mi = 0.0;
  for (std::size_t x = 0; x < j.n_im; ++x)
    for (std::size_t y = 0; y < j.n_tx; ++y) {
      const double p = j(x, y);
      if (p > 0.0) mi += p * std::log(p / (pi[x] * pt[y]));
    }
  return mi;
}

// P(root | image x) or P(root | text y) from the naive table.
inline std::vector<double> naive_root_posterior(const NaiveJoint& j, Modality m, std::size_t index) {
  std::vector<double> post(j.states, 0.0);
  double total = 0.0;
  for (int r = 0; r < j.states; ++r) {
    const std::size_t other = m == Modality::kImage ? j.n_tx : j.n_im;
    for (std::size_t k = 0; k < other; ++k) {
      const std::size_t x = m == Modality::kImage ? index : k;
      const std::size_t y = m == Modality::kImage ? k : index;
      post[r] += j.by_root[(r * j.n_im + x) * j.n_tx + y];
    }
    total += post[r];
  }
  for (double& v : post) v /= total;
  return post;
}

inline std::vector<int> leaves_of(std::size_t index, std::size_t length, int states) {
  return configuration_from_index(index, length, states);
}

// E[x_im | z, x_tx = y] with states read as 1..S, straight from the table.
inline std::vector<double> naive_denoiser(const NaiveJoint& j, const NoisyImage& z, std::size_t y) {
  const std::size_t d = z.z.size();
  std::vector<double> log_w(j.n_im, 0.0);
  double peak = -INFINITY;
  for (std::size_t x = 0; x < j.n_im; ++x) {
    if (j(x, y) == 0.0) {
      log_w[x] = -INFINITY;
      continue;
    }
    const auto leaves = configuration_from_index(x, d, j.states);
    log_w[x] = std::log(j(x, y));
    if (z.t > 0.0)
      for (std::size_t v = 0; v < d; ++v) {
        const double r = z.z[v] - z.t * (leaves[v] + 1.0);
        log_w[x] -= r * r / (2 * z.t);
      }
    peak = std::max(peak, log_w[x]);
  }
  std::vector<double> num(d, 0.0);
  double den = 0.0;
  for (std::size_t x = 0; x < j.n_im; ++x) {
    const double w = std::exp(log_w[x] - peak);
    if (w == 0.0) continue;
    const auto leaves = configuration_from_index(x, d, j.states);
    den += w;
    for (std::size_t v = 0; v < d; ++v) num[v] += w * (leaves[v] + 1.0);
  }
  for (double& v : num) v /= den;
  return num;
}

// P(x_tx[i] | x_im = x, x_tx[0..i) = prefix) from the table.
inline std::vector<double> naive_next_token(const NaiveJoint& j, std::size_t x, std::size_t d_tx,
                                            const std::vector<int>& prefix) {
  std::vector<double> p(j.states, 0.0);
  for (std::size_t y = 0; y < j.n_tx; ++y) {
    const auto text = configuration_from_index(y, d_tx, j.states);
    if (!std::equal(prefix.begin(), prefix.end(), text.begin())) continue;
    p[text[prefix.size()]] += j(x, y);
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace jghm::testing
