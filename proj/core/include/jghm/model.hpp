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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jghm {

/// Raised when a model, topology or argument violates a documented invariant.
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Modality { kImage, kText };

const char* modality_name(Modality m);

/// Shape of the two trees hanging off the shared root.
///
/// Levels are numbered 0 (root) to depth (leaves). `branching(m, l)` for
/// l in [1, depth] is the number of children every level-(l-1) node has.
/// States are 0-based internally; every file format shifts them to 1-based.
struct TreeTopology {
  int depth = 1;
  std::vector<int> branching_im{1};
  std::vector<int> branching_tx{1};
  int states = 2;

  const std::vector<int>& branching(Modality m) const {
    return m == Modality::kImage ? branching_im : branching_tx;
  }
  int branching(Modality m, int level) const { return branching(m)[level - 1]; }

  /// Number of nodes at `level` of the given tree (1 at the root).
  std::size_t nodes_at_level(Modality m, int level) const;
  std::size_t leaf_count(Modality m) const { return nodes_at_level(m, depth); }
  /// Root, both sets of intermediate nodes, and both leaf sets.
  std::size_t total_nodes() const;

  /// Largest level-1 branching factor across the two trees.
  int max_first_branching() const;

  /// Throws InvariantError on the first violated invariant.
  void check() const;

  bool operator==(const TreeTopology&) const = default;
};

/// Row-stochastic S x S matrix; entry (s, a) is the probability that a child
/// takes state a given its parent is in state s.
class TransitionKernel {
 public:
  TransitionKernel() = default;
  explicit TransitionKernel(int states);
  TransitionKernel(int states, std::vector<double> row_major);

  static TransitionKernel uniform(int states);
  static TransitionKernel identity(int states);

  int states() const { return states_; }
  double operator()(int parent, int child) const {
    return values_[static_cast<std::size_t>(parent) * states_ + child];
  }
  double& at(int parent, int child) {
    return values_[static_cast<std::size_t>(parent) * states_ + child];
  }
  std::span<const double> row(int parent) const {
    return {values_.data() + static_cast<std::size_t>(parent) * states_,
            static_cast<std::size_t>(states_)};
  }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const TransitionKernel&) const = default;

 private:
  int states_ = 0;
  std::vector<double> values_;
};

struct ModelMetadata {
  double p_flip = 0.0;
  std::uint64_t seed = 0;
  double gaussian_scale = 1.0;

  bool operator==(const ModelMetadata&) const = default;
};

/// Full parameterization of the joint hierarchical model.
///
/// kernels(m)[l - 1][rank] is the kernel used by every level-l node whose
/// 0-based position among its siblings is `rank`.
struct JghmModel {
  TreeTopology topology;
  std::vector<double> root_prior;
  std::vector<std::vector<TransitionKernel>> kernels_im;
  std::vector<std::vector<TransitionKernel>> kernels_tx;
  std::optional<ModelMetadata> metadata;

  const std::vector<std::vector<TransitionKernel>>& kernels(Modality m) const {
    return m == Modality::kImage ? kernels_im : kernels_tx;
  }
  /// Kernel feeding node `node` (0-based position within its level) at `level`.
  const TransitionKernel& kernel_for(Modality m, int level, std::size_t node) const {
    const auto& per_level = kernels(m)[level - 1];
    return per_level[node % per_level.size()];
  }
  int states() const { return topology.states; }

  bool operator==(const JghmModel&) const = default;
};

/// A model whose every kernel is `kernel` and whose prior is uniform.
JghmModel make_constant_model(const TreeTopology& topology, const TransitionKernel& kernel);

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  /// max over all kernel and prior entries of max(v, 1/v); +inf with zeros.
  double b_psi = 0.0;

  bool ok() const { return errors.empty(); }
};

/// Checks every model invariant. Zero entries are a warning (B_psi = inf).
ValidationReport validate_model(const JghmModel& model);

/// Throws InvariantError listing the violations when validation fails.
double require_valid(const JghmModel& model);

/// Effective boundedness constant of the kernels and prior.
double effective_b_psi(const JghmModel& model);

/// 1-based leaf number of the leaf reached by the 1-based rank path
/// (rank at level 1 first). Bijective onto [1, leaf_count].
std::size_t leaf_index(const TreeTopology& topology, Modality m, std::span<const int> rank_path);

/// Inverse of leaf_index.
std::vector<int> rank_path(const TreeTopology& topology, Modality m, std::size_t leaf_number);

/// Generation parameters for the permutation-plus-noise kernel family.
struct ModelGenSpec {
  TreeTopology topology;
  double p_flip = 0.0;
  std::uint64_t seed = 0;
  double gaussian_scale = 1.0;
};

/// The two ingredients of one generated kernel, before mixing.
struct PflipComponents {
  std::vector<int> permutation;       // row s has its one at column permutation[s]
  TransitionKernel softmax_gaussian;  // softmax over each row of a Gaussian matrix
};

/// Deterministic in (seed, modality, level, rank); independent of p_flip.
PflipComponents pflip_components(const ModelGenSpec& spec, Modality m, int level, int rank);

/// kernel = (1 - p_flip) * permutation + p_flip * softmax_row(G), uniform root.
JghmModel make_pflip_model(const ModelGenSpec& spec);

}  // namespace jghm
