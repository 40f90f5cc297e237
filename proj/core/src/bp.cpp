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

#include "jghm/bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jghm {
namespace {

void check_leaves(const JghmModel& model, Modality m, std::span<const int> leaves) {
  if (leaves.size() != model.topology.leaf_count(m)) {
    throw InvariantError(std::string(modality_name(m)) + " leaves: wrong length");
  }
  for (int x : leaves) {
    if (x < 0 || x >= model.states()) {
      throw InvariantError(std::string(modality_name(m)) + " leaves: state out of range");
    }
  }
}

void add_into(Belief& acc, std::span<const double> b) {
  for (std::size_t s = 0; s < acc.size(); ++s) acc[s] += b[s];
}

// Number of leaves below one node of `level`.
std::size_t leaves_below(const TreeTopology& topo, Modality m, int level) {
  std::size_t n = 1;
  for (int l = level + 1; l <= topo.depth; ++l) n *= static_cast<std::size_t>(topo.branching(m, l));
  return n;
}

}  // namespace

std::vector<Belief> leaf_point_evidence(int states, std::span<const int> leaves) {
  std::vector<Belief> out;
  out.reserve(leaves.size());
  for (int x : leaves) out.push_back(point_evidence(states, x));
  return out;
}

MessageStack downsweep(const JghmModel& model, Modality m, std::vector<Belief> leaf_evidence,
                       PriorPlacement prior) {
  const auto& topo = model.topology;
  const int L = topo.depth;
  const int S = model.states();
  if (leaf_evidence.size() != topo.leaf_count(m)) {
    throw InvariantError("downsweep: evidence count differs from leaf count");
  }
  MessageStack stack;
  stack.h.resize(L + 1);
  stack.q.resize(L + 1);
  stack.h[L] = std::move(leaf_evidence);

  Belief prior_share;
  if (prior == PriorPlacement::kSplitAtLevelOne) {
    const double share = 1.0 / topo.branching(m, 1);
    prior_share.resize(S);
    for (int s = 0; s < S; ++s) prior_share[s] = share * std::log(model.root_prior[s]);
  }

  for (int l = L; l >= 1; --l) {
    const auto width = static_cast<std::size_t>(topo.branching(m, l));
    const std::size_t count = stack.h[l].size();
    auto& q = stack.q[l];
    q.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
      q[j] = step_down(model.kernel_for(m, l, j), stack.h[l][j],
                       l == 1 ? std::span<const double>(prior_share) : std::span<const double>());
    }
    auto& parents = stack.h[l - 1];
    parents.assign(count / width, Belief(S, 0.0));
    for (std::size_t j = 0; j < count; ++j) add_into(parents[j / width], q[j]);
    if (l == 1 && prior == PriorPlacement::kOnceAtRoot) {
      for (int s = 0; s < S; ++s) parents[0][s] += std::log(model.root_prior[s]);
    }
    for (auto& p : parents) p = normalize(std::move(p));
  }
  return stack;
}

Belief root_log_posterior(const JghmModel& model, Modality m, std::span<const int> leaves,
                          PriorPlacement prior) {
  check_leaves(model, m, leaves);
  MessageStack stack = downsweep(model, m, leaf_point_evidence(model.states(), leaves), prior);
  return std::move(stack.h[0][0]);
}

std::vector<double> root_posterior(const JghmModel& model, Modality m, std::span<const int> leaves,
                                   PriorPlacement prior) {
  return softmax(root_log_posterior(model, m, leaves, prior));
}

double score_from_posteriors(std::span<const double> prior, std::span<const double> p_im,
                             std::span<const double> p_tx) {
  double total = 0.0;
  for (std::size_t s = 0; s < prior.size(); ++s) total += p_im[s] * p_tx[s] / prior[s];
  return total > 0.0 ? std::log(total) : kNegInf;
}

double readout_bound(const JghmModel& model) {
  return 4.0 * model.topology.max_first_branching() * std::log(effective_b_psi(model));
}

double optimal_score(const JghmModel& model, std::span<const int> x_im, std::span<const int> x_tx,
                     std::optional<double> clamp) {
  const auto p_im = root_posterior(model, Modality::kImage, x_im);
  const auto p_tx = root_posterior(model, Modality::kText, x_tx);
  double score = score_from_posteriors(model.root_prior, p_im, p_tx);
  if (clamp) score = std::clamp(score, -*clamp, *clamp);
  return score;
}

std::vector<std::vector<double>> image_leaf_posteriors(const JghmModel& model, const NoisyImage& z,
                                                       std::span<const double> root_context,
                                                       MessageStack* stack_out) {
  const auto& topo = model.topology;
  const int L = topo.depth;
  const int S = model.states();
  if (z.z.size() != topo.leaf_count(Modality::kImage)) {
    throw InvariantError("denoiser: noisy image has the wrong length");
  }
  MessageStack stack = downsweep(model, Modality::kImage, leaf_evidence_from_noise(z.t, z.z, S),
                                 PriorPlacement::kNone);
  stack.up.resize(L + 1);
  Belief root = stack.h[0][0];
  add_into(root, root_context);
  stack.up[0] = {std::move(root)};
  for (int l = 1; l <= L; ++l) {
    const auto width = static_cast<std::size_t>(topo.branching(Modality::kImage, l));
    const std::size_t count = stack.h[l].size();
    stack.up[l].resize(count);
    for (std::size_t j = 0; j < count; ++j) {
      const Belief& parent = stack.up[l - 1][j / width];
      Belief b = step_up(model.kernel_for(Modality::kImage, l, j),
                         normalize(cavity(parent, stack.q[l][j])));
      add_into(b, stack.h[l][j]);
      stack.up[l][j] = std::move(b);
    }
  }
  std::vector<std::vector<double>> posteriors;
  posteriors.reserve(stack.up[L].size());
  for (const auto& b : stack.up[L]) posteriors.push_back(softmax(b));
  if (stack_out) *stack_out = std::move(stack);
  return posteriors;
}

std::vector<double> denoiser_with_context(const JghmModel& model, const NoisyImage& z,
                                          std::span<const double> root_context) {
  const auto posteriors = image_leaf_posteriors(model, z, root_context);
  std::vector<double> out(posteriors.size());
  for (std::size_t v = 0; v < posteriors.size(); ++v) {
    double mean = 0.0;
    for (std::size_t s = 0; s < posteriors[v].size(); ++s) {
      mean += static_cast<double>(s + 1) * posteriors[v][s];
    }
    out[v] = mean;
  }
  return out;
}

std::vector<double> bayes_denoiser(const JghmModel& model, const NoisyImage& z,
                                   std::span<const int> x_tx, MessageStack* stack) {
  const Belief context = root_log_posterior(model, Modality::kText, x_tx);
  const auto posteriors = image_leaf_posteriors(model, z, context, stack);
  std::vector<double> out(posteriors.size());
  for (std::size_t v = 0; v < posteriors.size(); ++v) {
    double mean = 0.0;
    for (std::size_t s = 0; s < posteriors[v].size(); ++s) {
      mean += static_cast<double>(s + 1) * posteriors[v][s];
    }
    out[v] = mean;
  }
  return out;
}

std::vector<double> next_token_posterior_with_context(const JghmModel& model,
                                                      std::span<const double> root_context,
                                                      std::span<const int> prefix) {
  const auto& topo = model.topology;
  const int L = topo.depth;
  const int S = model.states();
  const std::size_t d = topo.leaf_count(Modality::kText);
  if (prefix.size() >= d) throw InvariantError("next_token_posterior: prefix longer than d_tx - 1");
  for (int x : prefix) {
    if (x < 0 || x >= S) throw InvariantError("next_token_posterior: state out of range");
  }

  std::vector<Belief> evidence(d, flat_evidence(S));
  for (std::size_t v = 0; v < prefix.size(); ++v) evidence[v] = point_evidence(S, prefix[v]);
  const MessageStack stack =
      downsweep(model, Modality::kText, std::move(evidence), PriorPlacement::kNone);

  const std::size_t target = prefix.size();
  Belief belief = stack.h[0][0];
  add_into(belief, root_context);
  for (int l = 1; l <= L; ++l) {
    const std::size_t node = target / leaves_below(topo, Modality::kText, l);
    Belief b = step_up(model.kernel_for(Modality::kText, l, node),
                       normalize(cavity(belief, stack.q[l][node])));
    add_into(b, stack.h[l][node]);
    belief = std::move(b);
  }
  return softmax(belief);
}

std::vector<double> next_token_posterior_bp(const JghmModel& model, std::span<const int> x_im,
                                            std::span<const int> prefix) {
  const Belief context = root_log_posterior(model, Modality::kImage, x_im);
  return next_token_posterior_with_context(model, context, prefix);
}

std::vector<std::vector<double>> next_token_posteriors_parallel_with_context(
    const JghmModel& model, std::span<const double> root_context, std::span<const int> x_tx,
    MessageStack* stack_out) {
  const auto& topo = model.topology;
  const int L = topo.depth;
  const int S = model.states();
  const Modality tx = Modality::kText;
  if (x_tx.size() != topo.leaf_count(tx)) throw InvariantError("text leaves: wrong length");
  for (int x : x_tx) {
    if (x < 0 || x >= S) throw InvariantError("text leaves: state out of range");
  }
  const std::size_t d = x_tx.size();

  std::vector<std::size_t> span(L + 1);
  for (int l = 0; l <= L; ++l) span[l] = leaves_below(topo, tx, l);
  auto ancestor = [&](std::size_t leaf, int l) { return leaf / span[l]; };

  // Grouped downsweep: every quantity is indexed by the last observed leaf v.
  // h[l][v] aggregates the leaves <= v below v's level-l ancestor.
  MessageStack g;
  g.h.assign(L + 1, std::vector<Belief>(d));
  g.q.assign(L + 1, std::vector<Belief>(d));
  for (std::size_t v = 0; v < d; ++v) g.h[L][v] = point_evidence(S, x_tx[v]);
  for (int l = L; l >= 1; --l) {
    for (std::size_t v = 0; v < d; ++v) {
      g.q[l][v] = step_down(model.kernel_for(tx, l, ancestor(v, l)), g.h[l][v]);
    }
    const auto width = static_cast<std::size_t>(topo.branching(tx, l));
    Belief completed(S, 0.0);  // sum of messages of fully observed left siblings
    for (std::size_t v = 0; v < d; ++v) {
      const std::size_t node = ancestor(v, l);
      if (v % span[l - 1] == 0) std::fill(completed.begin(), completed.end(), 0.0);
      Belief acc = completed;
      add_into(acc, g.q[l][v]);
      g.h[l - 1][v] = normalize(std::move(acc));
      const bool closes_node = (v + 1) % span[l] == 0;
      if (closes_node && node % width != width - 1) add_into(completed, g.q[l][v]);
    }
  }

  std::vector<std::vector<double>> out(d);

  // First token: no text observed, propagate the root context down the
  // leftmost path.
  {
    Belief b(root_context.begin(), root_context.end());
    for (int l = 1; l <= L; ++l) b = step_up(model.kernel_for(tx, l, 0), normalize(std::move(b)));
    out[0] = softmax(b);
  }

  g.up.assign(L + 1, std::vector<Belief>(d));
  for (std::size_t v = 0; v < d; ++v) {
    Belief b = g.h[0][v];
    add_into(b, root_context);
    g.up[0][v] = b;
    if (v + 1 == d) continue;
    for (int l = 1; l <= L; ++l) {
      const std::size_t next_node = ancestor(v + 1, l);
      const TransitionKernel& k = model.kernel_for(tx, l, next_node);
      if (ancestor(v, l) == next_node) {
        Belief nb = step_up(k, normalize(cavity(b, g.q[l][v])));
        add_into(nb, g.h[l][v]);
        b = std::move(nb);
      } else {
        b = step_up(k, normalize(std::move(b)));
      }
      g.up[l][v] = b;
    }
    out[v + 1] = softmax(b);
  }
  if (stack_out) *stack_out = std::move(g);
  return out;
}

std::vector<std::vector<double>> next_token_posteriors_parallel(const JghmModel& model,
                                                                std::span<const int> x_im,
                                                                std::span<const int> x_tx,
                                                                MessageStack* stack) {
  const Belief context = root_log_posterior(model, Modality::kImage, x_im);
  return next_token_posteriors_parallel_with_context(model, context, x_tx, stack);
}

}  // namespace jghm
