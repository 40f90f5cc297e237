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

#include "jghm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace jghm::oracle {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// P(leaves | root = s) for one tree, by summing over every hidden assignment.
std::vector<double> tree_table(const JghmModel& model, Modality m, std::size_t n_leaves_conf) {
  const TreeTopology& topo = model.topology;
  const int S = topo.states;
  const int L = topo.depth;
  std::vector<std::size_t> offset(L + 1, 0);
  std::size_t nodes = 0;
  for (int l = 1; l <= L; ++l) {
    offset[l] = nodes;
    nodes += topo.nodes_at_level(m, l);
  }
  const std::size_t leaf_offset = offset[L];
  const std::size_t d = topo.leaf_count(m);

  std::vector<double> table(static_cast<std::size_t>(S) * n_leaves_conf, 0.0);
  std::vector<int> state(nodes, 0);
  for (int root = 0; root < S; ++root) {
    std::fill(state.begin(), state.end(), 0);
    while (true) {
      double p = 1.0;
      for (int l = 1; l <= L && p > 0.0; ++l) {
        const std::size_t count = topo.nodes_at_level(m, l);
        const auto branch = static_cast<std::size_t>(topo.branching(m, l));
        for (std::size_t j = 0; j < count; ++j) {
          const int parent = l == 1 ? root : state[offset[l - 1] + j / branch];
          p *= model.kernel_for(m, l, j)(parent, state[offset[l] + j]);
        }
      }
      if (p > 0.0) {
        std::size_t x = 0;
        for (std::size_t v = 0; v < d; ++v) x = x * S + static_cast<std::size_t>(state[leaf_offset + v]);
        table[static_cast<std::size_t>(root) * n_leaves_conf + x] += p;
      }
      // Odometer over all node states.
      std::size_t k = nodes;
      while (k > 0) {
        --k;
        if (++state[k] < S) break;
        state[k] = 0;
      }
      if (k == 0 && state[0] == 0) break;
    }
  }
  return table;
}

std::size_t pow_size(int base, std::size_t exponent) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exponent; ++i) out *= static_cast<std::size_t>(base);
  return out;
}

double xlogy_ratio(double p, double q) {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) return kInf;
  return p * std::log(p / q);
}

void check_length(const JointTable& table, Modality m, std::size_t length) {
  if (length != table.length(m)) {
    throw InvariantError(std::string("oracle: expected ") + std::to_string(table.length(m)) + " " +
                         modality_name(m) + " leaves, got " + std::to_string(length));
  }
}

// Weighted sum of joint entries: P(x, W) for image x with text weights w.
std::vector<double> image_mass(const JointTable& table, std::span<const double> text_weights) {
  std::vector<double> out(table.n_im, 0.0);
  for (std::size_t x = 0; x < table.n_im; ++x) {
    double acc = 0.0;
    for (std::size_t y = 0; y < table.n_tx; ++y) acc += text_weights[y] * table(x, y);
    out[x] = acc;
  }
  return out;
}

}  // namespace

double configuration_count(const TreeTopology& topology) {
  return std::pow(static_cast<double>(topology.states), static_cast<double>(topology.total_nodes()));
}

JointTable enumerate_joint(const JghmModel& model, double budget) {
  require_valid(model);
  const TreeTopology& topo = model.topology;
  const double count = configuration_count(topo);
  if (count > budget) {
    throw InvariantError("enumeration budget exceeded: S^nodes = " + std::to_string(count) +
                         " > " + std::to_string(budget));
  }
  JointTable t;
  t.states = topo.states;
  t.d_im = topo.leaf_count(Modality::kImage);
  t.d_tx = topo.leaf_count(Modality::kText);
  t.n_im = pow_size(t.states, t.d_im);
  t.n_tx = pow_size(t.states, t.d_tx);
  t.root_prior = model.root_prior;
  t.im_given_root = tree_table(model, Modality::kImage, t.n_im);
  t.tx_given_root = tree_table(model, Modality::kText, t.n_tx);

  t.joint.assign(t.n_im * t.n_tx, 0.0);
  t.marginal_im.assign(t.n_im, 0.0);
  t.marginal_tx.assign(t.n_tx, 0.0);
  for (int s = 0; s < t.states; ++s) {
    const double ps = t.root_prior[s];
    const double* im = t.im_given_root.data() + static_cast<std::size_t>(s) * t.n_im;
    const double* tx = t.tx_given_root.data() + static_cast<std::size_t>(s) * t.n_tx;
    for (std::size_t x = 0; x < t.n_im; ++x) {
      const double a = ps * im[x];
      if (a == 0.0) continue;
      double* row = t.joint.data() + x * t.n_tx;
      for (std::size_t y = 0; y < t.n_tx; ++y) row[y] += a * tx[y];
    }
  }
  for (std::size_t x = 0; x < t.n_im; ++x) {
    for (std::size_t y = 0; y < t.n_tx; ++y) {
      t.marginal_im[x] += t(x, y);
      t.marginal_tx[y] += t(x, y);
    }
  }
  return t;
}

std::vector<double> exact_conditional_root(const JointTable& table, Modality m,
                                           std::span<const int> leaves) {
  check_length(table, m, leaves.size());
  const std::size_t n = table.count(m);
  const std::size_t x = configuration_index(leaves, table.states);
  const auto& cond = m == Modality::kImage ? table.im_given_root : table.tx_given_root;
  std::vector<double> post(table.states);
  double z = 0.0;
  for (int s = 0; s < table.states; ++s) {
    post[s] = table.root_prior[s] * cond[static_cast<std::size_t>(s) * n + x];
    z += post[s];
  }
  if (z <= 0.0) throw InvariantError("exact_conditional_root: leaves have zero probability");
  for (double& p : post) p /= z;
  return post;
}

double exact_mutual_information(const JointTable& table) {
  double mi = 0.0;
  for (std::size_t x = 0; x < table.n_im; ++x) {
    for (std::size_t y = 0; y < table.n_tx; ++y) {
      mi += xlogy_ratio(table(x, y), table.marginal_im[x] * table.marginal_tx[y]);
    }
  }
  return mi;
}

Fibers encoder_fibers(const JointTable& table, const Encoder& encoder) {
  Fibers f;
  f.modality = encoder.modality();
  const std::size_t n = table.count(f.modality);
  const std::size_t d = table.length(f.modality);
  f.fiber_of.resize(n);
  std::map<std::vector<double>, int> ids;
  for (std::size_t c = 0; c < n; ++c) {
    const auto leaves = configuration_from_index(c, d, table.states);
    auto [it, inserted] = ids.emplace(encoder.quantized(leaves), static_cast<int>(ids.size()));
    f.fiber_of[c] = it->second;
  }
  f.count = static_cast<int>(ids.size());
  return f;
}

namespace {

// P(x_m, other) accessor with the encoded modality first.
double pair_mass(const JointTable& t, Modality m, std::size_t x, std::size_t y) {
  return m == Modality::kImage ? t(x, y) : t(y, x);
}

// Joint mass of (fiber, other) and fiber marginals.
struct FiberJoint {
  std::vector<double> mass;  // [fiber * n_other + y]
  std::vector<double> fiber_marginal;
  std::size_t n_other = 0;
};

FiberJoint fiber_joint(const JointTable& t, const Fibers& f) {
  const Modality m = f.modality;
  const Modality other = m == Modality::kImage ? Modality::kText : Modality::kImage;
  FiberJoint fj;
  fj.n_other = t.count(other);
  fj.mass.assign(static_cast<std::size_t>(f.count) * fj.n_other, 0.0);
  fj.fiber_marginal.assign(f.count, 0.0);
  for (std::size_t x = 0; x < t.count(m); ++x) {
    const auto fib = static_cast<std::size_t>(f.fiber_of[x]);
    for (std::size_t y = 0; y < fj.n_other; ++y) {
      const double p = pair_mass(t, m, x, y);
      fj.mass[fib * fj.n_other + y] += p;
      fj.fiber_marginal[fib] += p;
    }
  }
  return fj;
}

}  // namespace

std::vector<std::vector<double>> fiber_conditionals(const JointTable& table, const Fibers& fibers) {
  const FiberJoint fj = fiber_joint(table, fibers);
  std::vector<std::vector<double>> out(fibers.count, std::vector<double>(fj.n_other, 0.0));
  for (std::size_t f = 0; f < out.size(); ++f) {
    if (fj.fiber_marginal[f] <= 0.0) continue;
    for (std::size_t y = 0; y < fj.n_other; ++y) {
      out[f][y] = fj.mass[f * fj.n_other + y] / fj.fiber_marginal[f];
    }
  }
  return out;
}

double exact_suff_encoder(const JointTable& table, const Encoder& encoder) {
  const Fibers f = encoder_fibers(table, encoder);
  const FiberJoint fj = fiber_joint(table, f);
  const Modality m = f.modality;
  const auto& marg = table.marginal(m);
  double suff = 0.0;
  for (std::size_t x = 0; x < table.count(m); ++x) {
    if (marg[x] <= 0.0) continue;
    const auto fib = static_cast<std::size_t>(f.fiber_of[x]);
    for (std::size_t y = 0; y < fj.n_other; ++y) {
      const double p = pair_mass(table, m, x, y);
      if (p <= 0.0) continue;
      const double cond = p / marg[x];
      const double fiber_cond = fj.mass[fib * fj.n_other + y] / fj.fiber_marginal[fib];
      suff += p * std::log(cond / fiber_cond);
    }
  }
  return std::max(suff, 0.0);
}

double exact_encoder_information(const JointTable& table, const Encoder& encoder) {
  const Fibers f = encoder_fibers(table, encoder);
  const FiberJoint fj = fiber_joint(table, f);
  const Modality other = f.modality == Modality::kImage ? Modality::kText : Modality::kImage;
  const auto& marg_other = table.marginal(other);
  double mi = 0.0;
  for (std::size_t fib = 0; fib < static_cast<std::size_t>(f.count); ++fib) {
    for (std::size_t y = 0; y < fj.n_other; ++y) {
      mi += xlogy_ratio(fj.mass[fib * fj.n_other + y], fj.fiber_marginal[fib] * marg_other[y]);
    }
  }
  return mi;
}

double exact_suff_score(const JointTable& table, const ScoreFunction& score) {
  const std::size_t nx = table.n_im;
  const std::size_t ny = table.n_tx;
  std::vector<std::vector<double>> e_im(nx);
  std::vector<std::vector<double>> e_tx(ny);
  for (std::size_t x = 0; x < nx; ++x) {
    e_im[x] = score.embed_image(configuration_from_index(x, table.d_im, table.states));
  }
  for (std::size_t y = 0; y < ny; ++y) {
    e_tx[y] = score.embed_text(configuration_from_index(y, table.d_tx, table.states));
  }
  std::vector<double> s(nx * ny);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) s[x * ny + y] = score.link(e_im[x], e_tx[y]);
  }

  // log P_S(y | x) = S(x, y) + log P(y) - log sum_y' exp(S(x, y')) P(y'), and
  // symmetrically for P_S(x | y).
  auto direction = [&](bool rows_are_images) {
    const std::size_t n_cond = rows_are_images ? nx : ny;
    const std::size_t n_out = rows_are_images ? ny : nx;
    const auto& marg_cond = rows_are_images ? table.marginal_im : table.marginal_tx;
    const auto& marg_out = rows_are_images ? table.marginal_tx : table.marginal_im;
    double total = 0.0;
    std::vector<double> logits(n_out);
    for (std::size_t a = 0; a < n_cond; ++a) {
      if (marg_cond[a] <= 0.0) continue;
      double mx = -kInf;
      for (std::size_t b = 0; b < n_out; ++b) {
        const double sv = rows_are_images ? s[a * ny + b] : s[b * ny + a];
        logits[b] = marg_out[b] > 0.0 ? sv + std::log(marg_out[b]) : -kInf;
        mx = std::max(mx, logits[b]);
      }
      if (!std::isfinite(mx)) return kInf;
      double z = 0.0;
      for (std::size_t b = 0; b < n_out; ++b) z += std::exp(logits[b] - mx);
      const double log_z = mx + std::log(z);
      for (std::size_t b = 0; b < n_out; ++b) {
        const double p = rows_are_images ? table(a, b) : table(b, a);
        if (p <= 0.0) continue;
        const double log_model = logits[b] - log_z;
        if (!std::isfinite(log_model)) return kInf;
        total += p * (std::log(p / marg_cond[a]) - log_model);
      }
    }
    return std::max(total, 0.0);
  };
  return direction(true) + direction(false);
}

std::vector<double> exact_denoiser(const JointTable& table, const NoisyImage& z,
                                   std::span<const int> x_tx) {
  check_length(table, Modality::kText, x_tx.size());
  std::vector<double> w(table.n_tx, 0.0);
  w[configuration_index(x_tx, table.states)] = 1.0;
  return exact_denoiser_weighted(table, z, w);
}

std::vector<double> exact_denoiser_weighted(const JointTable& table, const NoisyImage& z,
                                            std::span<const double> text_weights) {
  if (z.z.size() != table.d_im) throw InvariantError("exact_denoiser: noisy image has wrong length");
  if (text_weights.size() != table.n_tx) throw InvariantError("exact_denoiser: weight size mismatch");
  const std::vector<double> prior = image_mass(table, text_weights);
  std::vector<double> logw(table.n_im, -kInf);
  double mx = -kInf;
  for (std::size_t x = 0; x < table.n_im; ++x) {
    if (prior[x] <= 0.0) continue;
    const auto leaves = configuration_from_index(x, table.d_im, table.states);
    double ll = std::log(prior[x]);
    if (z.t > 0.0) {
      for (std::size_t v = 0; v < table.d_im; ++v) {
        const double diff = z.z[v] - z.t * (leaves[v] + 1);
        ll -= diff * diff / (2.0 * z.t);
      }
    }
    logw[x] = ll;
    mx = std::max(mx, ll);
  }
  if (!std::isfinite(mx)) throw InvariantError("exact_denoiser: conditioning event has zero mass");
  std::vector<double> mean(table.d_im, 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < table.n_im; ++x) {
    if (!std::isfinite(logw[x])) continue;
    const double w = std::exp(logw[x] - mx);
    total += w;
    const auto leaves = configuration_from_index(x, table.d_im, table.states);
    for (std::size_t v = 0; v < table.d_im; ++v) mean[v] += w * (leaves[v] + 1);
  }
  for (double& m : mean) m /= total;
  return mean;
}

std::vector<double> text_given_image(const JointTable& table, std::span<const int> x_im) {
  check_length(table, Modality::kImage, x_im.size());
  const std::size_t x = configuration_index(x_im, table.states);
  if (table.marginal_im[x] <= 0.0) throw InvariantError("text_given_image: image has zero probability");
  std::vector<double> out(table.n_tx);
  for (std::size_t y = 0; y < table.n_tx; ++y) out[y] = table(x, y) / table.marginal_im[x];
  return out;
}

std::vector<double> image_given_text(const JointTable& table, std::span<const int> x_tx) {
  check_length(table, Modality::kText, x_tx.size());
  const std::size_t y = configuration_index(x_tx, table.states);
  if (table.marginal_tx[y] <= 0.0) throw InvariantError("image_given_text: text has zero probability");
  std::vector<double> out(table.n_im);
  for (std::size_t x = 0; x < table.n_im; ++x) out[x] = table(x, y) / table.marginal_tx[y];
  return out;
}

std::vector<double> next_token_from_text_law(const JointTable& table,
                                             std::span<const double> text_law,
                                             std::span<const int> prefix) {
  const std::size_t i = prefix.size();
  if (i >= table.d_tx) throw InvariantError("next_token: prefix covers the whole text");
  if (text_law.size() != table.n_tx) throw InvariantError("next_token: law size mismatch");
  // Texts sharing the prefix form one contiguous block in lexicographic order.
  const std::size_t block = pow_size(table.states, table.d_tx - i);
  const std::size_t sub = block / static_cast<std::size_t>(table.states);
  const std::size_t start = configuration_index(prefix, table.states) * block;
  std::vector<double> out(table.states, 0.0);
  double z = 0.0;
  for (int a = 0; a < table.states; ++a) {
    const std::size_t base = start + static_cast<std::size_t>(a) * sub;
    for (std::size_t k = 0; k < sub; ++k) out[a] += text_law[base + k];
    z += out[a];
  }
  if (z <= 0.0) throw InvariantError("next_token: prefix has zero probability");
  for (double& p : out) p /= z;
  return out;
}

std::vector<double> exact_next_token(const JointTable& table, std::span<const int> x_im,
                                     std::span<const int> prefix) {
  return next_token_from_text_law(table, text_given_image(table, x_im), prefix);
}

std::vector<double> exact_zsc_limit(const JointTable& table, const ScoreFunction& score,
                                    std::span<const int> x_im) {
  check_length(table, Modality::kImage, x_im.size());
  const auto e_im = score.embed_image(x_im);
  std::vector<double> logits(table.n_tx, -kInf);
  double mx = -kInf;
  for (std::size_t y = 0; y < table.n_tx; ++y) {
    if (table.marginal_tx[y] <= 0.0) continue;
    const auto e_tx = score.embed_text(configuration_from_index(y, table.d_tx, table.states));
    logits[y] = score.link(e_im, e_tx) + std::log(table.marginal_tx[y]);
    mx = std::max(mx, logits[y]);
  }
  if (!std::isfinite(mx)) throw InvariantError("exact_zsc_limit: score gives no text positive mass");
  std::vector<double> out(table.states, 0.0);
  double z = 0.0;
  for (std::size_t y = 0; y < table.n_tx; ++y) {
    if (!std::isfinite(logits[y])) continue;
    const double w = std::exp(logits[y] - mx);
    z += w;
    for (int s = 0; s < table.states; ++s) {
      const double joint = table.root_prior[s] * table.tx_given_root[static_cast<std::size_t>(s) * table.n_tx + y];
      out[s] += w * joint / table.marginal_tx[y];
    }
  }
  for (double& p : out) p /= z;
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvariantError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += xlogy_ratio(p[i], q[i]);
  return std::max(kl, 0.0);
}

}  // namespace jghm::oracle
