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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "jghm/model.hpp"

namespace jghm {

/// Deterministic map from the leaves of one modality to a real vector.
///
/// Outputs are compared after rounding to `precision_digits()` decimals;
/// inputs with equal rounded outputs form one fiber of the encoder.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual Modality modality() const = 0;
  virtual std::vector<double> encode(std::span<const int> leaves) const = 0;
  virtual std::string name() const = 0;

  int precision_digits() const { return precision_digits_; }
  void set_precision_digits(int digits) { precision_digits_ = digits; }

  std::vector<double> quantized(std::span<const int> leaves) const;

 private:
  int precision_digits_ = 12;
};

/// Separator representation [P(s | x) / P(s)]_s.
class CanonicalEncoder final : public Encoder {
 public:
  CanonicalEncoder(JghmModel model, Modality m) : model_(std::move(model)), modality_(m) {}

  Modality modality() const override { return modality_; }
  std::vector<double> encode(std::span<const int> leaves) const override;
  std::string name() const override { return "canonical"; }

 private:
  JghmModel model_;
  Modality modality_;
};

/// Root posterior with two states merged into one (first merged slot holds
/// their summed mass), compared at one decimal digit. A real-valued output
/// at full precision separates every configuration of a finite leaf space,
/// so the coarse precision is what makes this encoder lose information.
class CoarsenedRootEncoder final : public Encoder {
 public:
  static constexpr int kDefaultDigits = 1;
  CoarsenedRootEncoder(JghmModel model, Modality m, int merge_a = 0, int merge_b = 1);

  Modality modality() const override { return modality_; }
  std::vector<double> encode(std::span<const int> leaves) const override;
  std::string name() const override { return "coarsened"; }

  /// Group index of every original state.
  const std::vector<int>& groups() const { return groups_; }
  int group_count() const { return group_count_; }

 private:
  JghmModel model_;
  Modality modality_;
  std::vector<int> groups_;
  int group_count_ = 0;
};

/// Maps every input to the same vector.
class ConstantEncoder final : public Encoder {
 public:
  explicit ConstantEncoder(Modality m) : modality_(m) {}

  Modality modality() const override { return modality_; }
  std::vector<double> encode(std::span<const int>) const override { return {1.0}; }
  std::string name() const override { return "constant"; }

 private:
  Modality modality_;
};

/// Keeps the first `keep` leaves verbatim (as 1-based states) and drops the rest.
class PrefixEncoder final : public Encoder {
 public:
  PrefixEncoder(Modality m, std::size_t keep) : modality_(m), keep_(keep) {}

  Modality modality() const override { return modality_; }
  std::vector<double> encode(std::span<const int> leaves) const override;
  std::string name() const override { return "prefix"; }

 private:
  Modality modality_;
  std::size_t keep_;
};

std::unique_ptr<Encoder> canonical_encoder(const JghmModel& model, Modality m);

/// The lossy reference encoders shipped for the sufficiency experiments:
/// coarsened root posterior, constant, and half-length prefix.
std::vector<std::unique_ptr<Encoder>> lossy_reference_encoders(const JghmModel& model, Modality m);

}  // namespace jghm
