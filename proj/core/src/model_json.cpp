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

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "json_support.hpp"
#include "jghm/model_io.hpp"

namespace jghm {

using nlohmann::json;

namespace detail {

json topology_to_json(const TreeTopology& t) {
  return json{{"depth", t.depth},
              {"branching_im", t.branching_im},
              {"branching_tx", t.branching_tx},
              {"states", t.states}};
}

TreeTopology topology_from_json(const json& j) {
  TreeTopology t;
  t.depth = j.at("depth").get<int>();
  t.branching_im = j.at("branching_im").get<std::vector<int>>();
  t.branching_tx = j.at("branching_tx").get<std::vector<int>>();
  t.states = j.at("states").get<int>();
  return t;
}

}  // namespace detail

namespace {

json kernels_to_json(const std::vector<std::vector<TransitionKernel>>& ks) {
  json levels = json::array();
  for (const auto& per_level : ks) {
    json level = json::array();
    for (const auto& k : per_level) {
      json rows = json::array();
      for (int s = 0; s < k.states(); ++s) {
        const auto r = k.row(s);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
      }
      level.push_back(std::move(rows));
    }
    levels.push_back(std::move(level));
  }
  return levels;
}

std::vector<std::vector<TransitionKernel>> kernels_from_json(const json& j) {
  std::vector<std::vector<TransitionKernel>> ks;
  for (const auto& level : j) {
    auto& per_level = ks.emplace_back();
    for (const auto& rows : level) {
      const auto S = static_cast<int>(rows.size());
      std::vector<double> flat;
      flat.reserve(static_cast<std::size_t>(S) * S);
      for (const auto& row : rows) {
        if (row.size() != static_cast<std::size_t>(S)) {
          throw InvariantError("model json: kernel is not square");
        }
        for (const auto& v : row) flat.push_back(v.get<double>());
      }
      per_level.emplace_back(S, std::move(flat));
    }
  }
  return ks;
}

}  // namespace

std::string model_to_json(const JghmModel& model, int indent) {
  json j;
  j["topology"] = detail::topology_to_json(model.topology);
  j["root_prior"] = model.root_prior;
  j["kernels_im"] = kernels_to_json(model.kernels_im);
  j["kernels_tx"] = kernels_to_json(model.kernels_tx);
  if (model.metadata) {
    j["metadata"] = json{{"p_flip", model.metadata->p_flip},
                         {"seed", model.metadata->seed},
                         {"gaussian_scale", model.metadata->gaussian_scale}};
  }
  return j.dump(indent) + "\n";
}

JghmModel model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    JghmModel model;
    model.topology = detail::topology_from_json(j.at("topology"));
    model.root_prior = j.at("root_prior").get<std::vector<double>>();
    model.kernels_im = kernels_from_json(j.at("kernels_im"));
    model.kernels_tx = kernels_from_json(j.at("kernels_tx"));
    if (j.contains("metadata")) {
      const auto& m = j.at("metadata");
      model.metadata = ModelMetadata{m.at("p_flip").get<double>(),
                                     m.at("seed").get<std::uint64_t>(),
                                     m.value("gaussian_scale", 1.0)};
    }
    return model;
  } catch (const json::exception& e) {
    throw InvariantError(std::string("model json: ") + e.what());
  }
}

JghmModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

void write_model(const JghmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << model_to_json(model);
}

TreeTopology topology_from_json(std::string_view text) {
  try {
    return detail::topology_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw InvariantError(std::string("topology json: ") + e.what());
  }
}

}  // namespace jghm
