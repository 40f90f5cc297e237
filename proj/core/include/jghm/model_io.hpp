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

#include <filesystem>
#include <string>
#include <string_view>

#include "jghm/model.hpp"

namespace jghm {

/// Serializes to the model JSON document. Doubles use shortest round-trip
/// formatting, so parse(serialize(m)) == m bit for bit.
std::string model_to_json(const JghmModel& model, int indent = 2);

/// Parses the model JSON document. Throws InvariantError on schema errors;
/// does not run validate_model.
JghmModel model_from_json(std::string_view text);

JghmModel read_model(const std::filesystem::path& path);
void write_model(const JghmModel& model, const std::filesystem::path& path);

/// Parses a topology object {depth, branching_im, branching_tx, states}.
TreeTopology topology_from_json(std::string_view text);

}  // namespace jghm
