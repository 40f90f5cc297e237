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
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jghm/metrics.hpp"
#include "jghm/model.hpp"

namespace jghm {

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment description read from a JSON config file.
///
/// The model is either generated (`model` object: topology, seed,
/// gaussian_scale; p_flip comes from the sweep axes) or loaded from
/// `model_path`. Leaf arrays in configs are 1-based.
struct ExperimentConfig {
  std::optional<Task> task;
  std::optional<ModelGenSpec> model_spec;
  std::optional<std::string> model_path;
  std::vector<double> p_flip;
  std::vector<double> test_p_flip;
  double train_p_flip = 0.2;
  std::vector<int> K{8};
  std::vector<int> M{64};
  std::vector<double> t{1.0};
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double horizon = 20.0;
  double dt = 0.01;
  std::size_t count = 10;
  std::optional<double> noise_t;
  std::optional<std::vector<int>> image;  // 0-based after parsing
  std::optional<std::vector<int>> text;
  std::optional<std::string> out_dir;
  /// FNV-1a of the canonical JSON dump of the parsed document.
  std::string hash;
};

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Git-describe style identifier baked in at build time.
std::string build_id();

/// FNV-1a 64-bit hash as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

/// The model at one sweep point: generated with the given p_flip, or the
/// loaded file when the config names one.
JghmModel model_for(const ExperimentConfig& config, double p_flip);

/// Model used by the single-model commands (first p_flip of the list, or
/// the loaded file).
JghmModel default_model(const ExperimentConfig& config);

struct GenModelResult {
  std::string json;
  double b_psi = 0.0;
  std::vector<std::string> warnings;
};

/// Builds the model described by a generation spec {topology, p_flip, seed,
/// gaussian_scale}.
GenModelResult cmd_gen_model(std::string_view spec_json);

/// CSV of Bayes rows for every p_flip and OOD rows (mis-specified and
/// excess) for every test p_flip, preceded by '#' provenance lines.
std::string cmd_sweep(const ExperimentConfig& config);

/// One JSON object per sample; messages are included when requested.
std::string cmd_export_dataset(const ExperimentConfig& config, bool with_messages);

/// Zero-shot class probabilities for the configured (or a sampled) image.
std::string cmd_zsc(const ExperimentConfig& config);

/// Rounded SDE samples for the configured (or a sampled) text, as a JSON
/// histogram next to the exact conditional when it is enumerable.
std::string cmd_cdm_sample(const ExperimentConfig& config);

/// Next-token posteriors of the configured (or a sampled) image-text pair.
std::string cmd_vlm(const ExperimentConfig& config);

struct SelftestResult {
  std::vector<std::string> lines;  // "PASS ...", "FAIL ...", "SKIP ..."
  int failures = 0;
  int skips = 0;
};

/// Message passing against enumeration and parallel against sequential
/// next-token posteriors on built-in tiny models, plus an optional
/// user-supplied model file.
SelftestResult cmd_selftest(const std::optional<std::filesystem::path>& model_path = std::nullopt);

}  // namespace jghm
