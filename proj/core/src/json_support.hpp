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

// Private helpers shared by the serializers; nlohmann/json stays out of the
// installed headers.

#include <nlohmann/json.hpp>

#include "jghm/model.hpp"

namespace jghm::detail {

nlohmann::json topology_to_json(const TreeTopology& t);
TreeTopology topology_from_json(const nlohmann::json& j);

}  // namespace jghm::detail
