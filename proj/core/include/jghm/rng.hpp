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
#include <initializer_list>
#include <limits>
#include <span>

namespace jghm::rng {

/// Finalizer of SplitMix64; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Folds a sequence of words into one key. Order sensitive.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> words);

/// Logical purposes for which independent streams are derived.
enum class Purpose : std::uint64_t {
  kModelPermutation = 1,
  kModelGaussian = 2,
  kJointSample = 3,
  kContrastive = 4,
  kNoise = 5,
  kClassText = 6,
  kZsc = 7,
  kCdm = 8,
  kVlm = 9,
  kDiffusion = 10,
  kBootstrap = 11,
  kExport = 12,
  kTest = 99,
};

/// Counter-based stream: the k-th output is mix64(key + k * golden), so a
/// stream is fully determined by its key and never depends on how other
/// streams were consumed. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : key_(key) {}
  Stream(std::uint64_t seed, Purpose purpose, std::uint64_t index, std::uint64_t sub = 0)
      : key_(derive_key({seed, static_cast<std::uint64_t>(purpose), index, sub})) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n); n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (the second variate is cached).
  double normal();
  /// Index drawn with probability proportional to `weights` (non-negative,
  /// not all zero).
  int categorical(std::span<const double> weights);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace jghm::rng
