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

#include "jghm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "jghm/belief.hpp"
#include "jghm/bp.hpp"
#include "jghm/diffusion.hpp"
#include "jghm/model_io.hpp"
#include "jghm/oracle.hpp"
#include "jghm/sampler.hpp"
#include "jghm/score.hpp"
#include "json_support.hpp"

#ifndef JGHM_BUILD_ID
#define JGHM_BUILD_ID "unknown"
#endif

namespace jghm {
namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

template <typename T>
std::vector<T> read_list(const json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(std::string("config: '") + key + "' must be a list");
  if (j.empty()) throw ConfigError(std::string("config: '") + key + "' must not be empty");
  return j.get<std::vector<T>>();
}

std::vector<int> read_leaves(const json& j, const char* key) {
  auto leaves = read_list<int>(j, key);
  for (int& x : leaves) {
    if (x < 1) throw ConfigError(std::string("config: '") + key + "' holds 1-based states");
    --x;
  }
  return leaves;
}

json one_based(std::span<const int> leaves) {
  json out = json::array();
  for (int x : leaves) out.push_back(x + 1);
  return out;
}

json belief_json(std::span<const double> b) {
  json out = json::array();
  for (double v : b) {
    if (std::isfinite(v)) out.push_back(v);
    else out.push_back(nullptr);
  }
  return out;
}

json belief_grid(const std::vector<std::vector<Belief>>& grid) {
  json out = json::array();
  for (const auto& level : grid) {
    json row = json::array();
    for (const auto& b : level) row.push_back(belief_json(b));
    out.push_back(std::move(row));
  }
  return out;
}

json stack_json(const MessageStack& stack, bool with_up) {
  json out = {{"h", belief_grid(stack.h)}, {"q", belief_grid(stack.q)}};
  if (with_up) out["b"] = belief_grid(stack.up);
  return out;
}

std::vector<int> leaves_of(const ExperimentConfig& config, const JghmModel& model, Modality m) {
  const auto& given = m == Modality::kImage ? config.image : config.text;
  if (given) {
    if (given->size() != model.topology.leaf_count(m)) {
      throw ConfigError(std::string("config: ") + modality_name(m) + " has the wrong number of leaves");
    }
    for (int x : *given) {
      if (x >= model.states()) throw ConfigError("config: leaf state exceeds the state count");
    }
    return *given;
  }
  rng::Stream stream(config.seed, rng::Purpose::kJointSample, 0);
  const Sample s = sample_joint(model, stream);
  return m == Modality::kImage ? s.image() : s.text();
}

json provenance(const ExperimentConfig& config) {
  return {{"schema_version", kSchemaVersion},
          {"build", build_id()},
          {"seed", config.seed},
          {"config_hash", config.hash}};
}

std::string comment_header(const ExperimentConfig& config, const char* what) {
  return std::string("# jghm ") + what + "\n# build=" + build_id() + " seed=" + std::to_string(config.seed) +
         " config_hash=" + config.hash + "\n";
}

}  // namespace

std::string build_id() { return JGHM_BUILD_ID; }

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> known = {
      "task", "model", "model_path", "p_flip", "test_p_flip", "train_p_flip", "K", "M", "t", "n",
      "seed", "horizon", "dt", "count", "noise_t", "image", "text", "out"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
  }

  ExperimentConfig c;
  try {
    if (j.contains("task")) c.task = task_from_name(j["task"].get<std::string>());
    if (j.contains("model") && j.contains("model_path")) {
      throw ConfigError("config: give either 'model' or 'model_path', not both");
    }
    if (j.contains("model")) {
      const json& m = j["model"];
      if (!m.is_object() || !m.contains("topology")) throw ConfigError("config: 'model' needs a topology");
      ModelGenSpec spec;
      spec.topology = detail::topology_from_json(m["topology"]);
      spec.topology.check();
      spec.seed = m.value("seed", std::uint64_t{0});
      spec.gaussian_scale = m.value("gaussian_scale", 1.0);
      if (m.contains("p_flip")) spec.p_flip = m["p_flip"].get<double>();
      c.model_spec = spec;
    }
    if (j.contains("model_path")) c.model_path = j["model_path"].get<std::string>();
    if (j.contains("p_flip")) c.p_flip = read_list<double>(j["p_flip"], "p_flip");
    if (j.contains("test_p_flip")) c.test_p_flip = read_list<double>(j["test_p_flip"], "test_p_flip");
    if (j.contains("train_p_flip")) c.train_p_flip = j["train_p_flip"].get<double>();
    if (j.contains("K")) c.K = read_list<int>(j["K"], "K");
    if (j.contains("M")) c.M = read_list<int>(j["M"], "M");
    if (j.contains("t")) c.t = read_list<double>(j["t"], "t");
    if (j.contains("n")) c.n = j["n"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<double>();
    if (j.contains("dt")) c.dt = j["dt"].get<double>();
    if (j.contains("count")) c.count = j["count"].get<std::size_t>();
    if (j.contains("noise_t")) c.noise_t = j["noise_t"].get<double>();
    if (j.contains("image")) c.image = read_leaves(j["image"], "image");
    if (j.contains("text")) c.text = read_leaves(j["text"], "text");
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  for (double p : c.p_flip) if (!in_unit(p)) throw ConfigError("config: p_flip values must lie in [0, 1]");
  for (double p : c.test_p_flip) if (!in_unit(p)) throw ConfigError("config: test_p_flip values must lie in [0, 1]");
  if (!in_unit(c.train_p_flip)) throw ConfigError("config: train_p_flip must lie in [0, 1]");
  for (int k : c.K) if (k < 2) throw ConfigError("config: K values must be at least 2");
  for (int m : c.M) if (m < 1) throw ConfigError("config: M values must be at least 1");
  for (double t : c.t) if (t < 0.0) throw ConfigError("config: t values must be non-negative");
  if (c.n < 1) throw ConfigError("config: n must be at least 1");
  if (c.noise_t && *c.noise_t < 0.0) throw ConfigError("config: noise_t must be non-negative");
  if (c.p_flip.empty() && c.model_spec) c.p_flip = {c.model_spec->p_flip};
  if (!c.model_spec && !c.model_path) throw ConfigError("config: 'model' or 'model_path' is required");
  if (c.model_spec) {
    const TreeTopology& t = c.model_spec->topology;
    for (Modality m : {Modality::kImage, Modality::kText}) {
      const auto& given = m == Modality::kImage ? c.image : c.text;
      if (!given) continue;
      if (given->size() != t.leaf_count(m)) {
        throw ConfigError(std::string("config: ") + modality_name(m) + " has the wrong number of leaves");
      }
      for (int x : *given) {
        if (x >= t.states) throw ConfigError("config: leaf state exceeds the state count");
      }
    }
  }
  if (c.model_path && !c.test_p_flip.empty()) {
    throw ConfigError("config: test_p_flip needs a generated model, not model_path");
  }
  c.hash = fnv1a_hex(j.dump());
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

JghmModel model_for(const ExperimentConfig& config, double p_flip) {
  if (config.model_path) {
    JghmModel model = read_model(*config.model_path);
    require_valid(model);
    return model;
  }
  ModelGenSpec spec = *config.model_spec;
  spec.p_flip = p_flip;
  return make_pflip_model(spec);
}

JghmModel default_model(const ExperimentConfig& config) {
  return model_for(config, config.p_flip.empty() ? 0.0 : config.p_flip.front());
}

GenModelResult cmd_gen_model(std::string_view spec_json) {
  json j;
  try {
    j = json::parse(spec_json);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model spec: invalid JSON: ") + e.what());
  }
  ModelGenSpec spec;
  try {
    if (!j.is_object() || !j.contains("topology")) throw ConfigError("model spec: 'topology' is required");
    spec.topology = detail::topology_from_json(j["topology"]);
    spec.p_flip = j.value("p_flip", 0.0);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.gaussian_scale = j.value("gaussian_scale", 1.0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model spec: ") + e.what());
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("model spec: ") + e.what());
  }
  JghmModel model;
  try {
    model = make_pflip_model(spec);
  } catch (const InvariantError& e) {
    throw ConfigError(std::string("model spec: ") + e.what());
  }
  const ValidationReport report = validate_model(model);
  if (!report.ok()) throw InvariantError("generated model is invalid: " + report.errors.front());
  return {model_to_json(model), report.b_psi, report.warnings};
}

std::string cmd_sweep(const ExperimentConfig& config) {
  if (!config.task) throw ConfigError("sweep: config needs a 'task'");
  const Task task = *config.task;
  std::ostringstream out;
  out << comment_header(config, "sweep") << "# task=" << task_name(task) << "\n" << csv_header() << "\n";

  std::vector<EvalParams> points;
  auto base = [&] {
    EvalParams p;
    p.n = config.n;
    p.seed = config.seed;
    p.horizon = config.horizon;
    p.dt = config.dt;
    return p;
  };
  switch (task) {
    case Task::kClip:
      for (int K : config.K) { auto p = base(); p.K = K; points.push_back(p); }
      break;
    case Task::kCdm:
      for (double t : config.t) { auto p = base(); p.t = t; points.push_back(p); }
      break;
    case Task::kZsc:
    case Task::kVlm:
    case Task::kDiffusion:
      points.push_back(base());
      break;
  }

  for (double p_flip : config.p_flip) {
    const JghmModel model = model_for(config, p_flip);
    for (const auto& params : points) {
      out << to_csv_row(misspec_bp_eval(model, model, task, params).bayes) << "\n";
    }
    if (task == Task::kZsc) {
      const auto score = std::make_shared<OptimalScore>(model);
      for (int M : config.M) {
        out << to_csv_row(zsc_classifier_risk(model, score, M, config.n, config.seed)) << "\n";
        out << to_csv_row(zsc_accuracy(model, score, M, config.n, config.seed)) << "\n";
      }
    }
  }
  if (!config.test_p_flip.empty()) {
    const JghmModel train = model_for(config, config.train_p_flip);
    for (double p_test : config.test_p_flip) {
      const JghmModel test = model_for(config, p_test);
      for (const auto& params : points) {
        const MisspecResult r = misspec_bp_eval(train, test, task, params);
        out << to_csv_row(r.misspec) << "\n" << to_csv_row(r.excess) << "\n";
      }
    }
  }
  return out.str();
}

std::string cmd_export_dataset(const ExperimentConfig& config, bool with_messages) {
  const JghmModel model = default_model(config);
  const int S = model.states();
  std::ostringstream out;
  for (std::size_t i = 0; i < config.count; ++i) {
    rng::Stream stream(config.seed, rng::Purpose::kExport, i);
    const Sample s = sample_joint(model, stream);
    json line = provenance(config);
    line["index"] = i;
    line["x_r"] = s.root + 1;
    line["x_im"] = one_based(s.image());
    line["x_tx"] = one_based(s.text());
    json levels = {{"im", json::array()}, {"tx", json::array()}};
    for (const auto& level : s.levels_im) levels["im"].push_back(one_based(level));
    for (const auto& level : s.levels_tx) levels["tx"].push_back(one_based(level));
    line["levels"] = std::move(levels);

    std::optional<NoisyImage> noisy;
    if (config.noise_t) {
      noisy = noise_image(s.image(), *config.noise_t, stream);
      line["noisy"] = {{"t", noisy->t}, {"z", noisy->z}};
    }
    if (with_messages) {
      json messages;
      const auto im = downsweep(model, Modality::kImage, leaf_point_evidence(S, s.image()),
                                PriorPlacement::kSplitAtLevelOne);
      const auto tx = downsweep(model, Modality::kText, leaf_point_evidence(S, s.text()),
                                PriorPlacement::kSplitAtLevelOne);
      messages["clip"] = {{"im", stack_json(im, false)}, {"tx", stack_json(tx, false)}};
      MessageStack vlm;
      next_token_posteriors_parallel(model, s.image(), s.text(), &vlm);
      messages["vlm"] = stack_json(vlm, true);
      if (noisy) {
        MessageStack cdm;
        bayes_denoiser(model, *noisy, s.text(), &cdm);
        messages["cdm"] = stack_json(cdm, true);
      }
      line["messages"] = std::move(messages);
    }
    out << line.dump() << "\n";
  }
  return out.str();
}

std::string cmd_zsc(const ExperimentConfig& config) {
  const JghmModel model = default_model(config);
  const auto image = leaves_of(config, model, Modality::kImage);
  const auto score = maybe_cached(std::make_shared<OptimalScore>(model), model.topology);
  json out = provenance(config);
  out["image"] = one_based(image);
  out["posterior"] = root_posterior(model, Modality::kImage, image);
  json rows = json::array();
  for (int M : config.M) {
    rng::Stream stream(config.seed, rng::Purpose::kZsc, static_cast<std::uint64_t>(M));
    const auto probabilities = zsc_predict(model, *score, image, M, stream);
    const auto best = std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin();
    rows.push_back({{"M", M}, {"probabilities", probabilities}, {"argmax", best + 1}});
  }
  out["predictions"] = std::move(rows);
  return out.dump(2) + "\n";
}

std::string cmd_cdm_sample(const ExperimentConfig& config) {
  const JghmModel model = default_model(config);
  const auto text = leaves_of(config, model, Modality::kText);
  SdeConfig cfg;
  cfg.horizon = config.horizon;
  cfg.dt = config.dt;
  cfg.n = config.n;
  cfg.seed = config.seed;
  cfg.steps();
  const auto rounded = round_to_states(sample_image_sde(model, text, cfg), model.states());

  std::map<std::vector<int>, std::size_t> counts;
  for (const auto& x : rounded) ++counts[x];
  std::optional<std::vector<double>> target;
  if (oracle::configuration_count(model.topology) <= oracle::kDefaultBudget) {
    target = oracle::image_given_text(oracle::enumerate_joint(model), text);
  }
  json out = provenance(config);
  out["text"] = one_based(text);
  out["horizon"] = cfg.horizon;
  out["dt"] = cfg.dt;
  out["n"] = cfg.n;
  json histogram = json::array();
  for (const auto& [x, c] : counts) {
    json bin = {{"image", one_based(x)}, {"count", c},
                {"empirical", static_cast<double>(c) / static_cast<double>(cfg.n)}};
    if (target) bin["oracle"] = (*target)[configuration_index(x, model.states())];
    histogram.push_back(std::move(bin));
  }
  out["histogram"] = std::move(histogram);
  if (target) {
    const auto law = empirical_law(rounded, model.states());
    double tv = 0.0;
    for (std::size_t k = 0; k < law.size(); ++k) tv += std::abs(law[k] - (*target)[k]);
    out["tv"] = 0.5 * tv;
  }
  return out.dump(2) + "\n";
}

std::string cmd_vlm(const ExperimentConfig& config) {
  const JghmModel model = default_model(config);
  const auto image = leaves_of(config, model, Modality::kImage);
  const auto text = leaves_of(config, model, Modality::kText);
  json out = provenance(config);
  out["image"] = one_based(image);
  out["text"] = one_based(text);
  out["next_token"] = next_token_posteriors_parallel(model, image, text);
  return out.dump(2) + "\n";
}

namespace {

struct Check {
  std::string name;
  double worst = 0.0;
  double tolerance = 0.0;
  void update(double err) {
    if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
    worst = std::max(worst, err);
  }
  bool ok() const { return worst <= tolerance; }
};

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void selftest_model(const std::string& label, const JghmModel& model, SelftestResult& result) {
  const oracle::JointTable table = oracle::enumerate_joint(model);
  const int S = model.states();
  Check root{"root posterior", 0.0, 1e-8};
  Check score{"optimal score", 0.0, 1e-8};
  Check denoise{"denoiser", 0.0, 1e-8};
  Check next{"next token", 0.0, 1e-8};
  Check parallel{"parallel next token", 0.0, 1e-12};
  for (std::size_t i = 0; i < 16; ++i) {
    rng::Stream stream(0x5e1f7e57ULL, rng::Purpose::kTest, i);
    const Sample s = sample_joint(model, stream);
    root.update(max_abs_diff(root_posterior(model, Modality::kImage, s.image()),
                             oracle::exact_conditional_root(table, Modality::kImage, s.image())));
    root.update(max_abs_diff(root_posterior(model, Modality::kText, s.text()),
                             oracle::exact_conditional_root(table, Modality::kText, s.text())));
    const std::size_t x = configuration_index(s.image(), S);
    const std::size_t y = configuration_index(s.text(), S);
    const double pmi = std::log(table(x, y) / (table.marginal_im[x] * table.marginal_tx[y]));
    score.update(std::abs(optimal_score(model, s.image(), s.text()) - pmi));
    for (double t : {0.5, 2.0}) {
      const NoisyImage z = noise_image(s.image(), t, stream);
      denoise.update(max_abs_diff(bayes_denoiser(model, z, s.text()), oracle::exact_denoiser(table, z, s.text())));
    }
    const auto par = next_token_posteriors_parallel(model, s.image(), s.text());
    for (std::size_t k = 0; k < s.text().size(); ++k) {
      const std::span<const int> prefix(s.text().data(), k);
      const auto seq = next_token_posterior_bp(model, s.image(), prefix);
      next.update(max_abs_diff(seq, oracle::exact_next_token(table, s.image(), prefix)));
      parallel.update(max_abs_diff(par[k], seq));
    }
  }
  for (const Check* c : {&root, &score, &denoise, &next, &parallel}) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " (max err %.3g, tol %.0e)", c->worst, c->tolerance);
    result.lines.push_back(std::string(c->ok() ? "PASS " : "FAIL ") + label + ": " + c->name + buf);
    if (!c->ok()) ++result.failures;
  }
}

}  // namespace

SelftestResult cmd_selftest(const std::optional<std::filesystem::path>& model_path) {
  SelftestResult result;
  const TreeTopology tiny{2, {2, 2}, {2, 2}, 3};
  const TreeTopology uneven{2, {3, 1}, {1, 2}, 2};
  std::vector<std::pair<std::string, JghmModel>> models;
  for (std::uint64_t seed : {1, 2, 3}) {
    models.emplace_back("tiny seed " + std::to_string(seed), make_pflip_model({tiny, 0.25, seed, 1.0}));
  }
  models.emplace_back("tiny p_flip=0", make_pflip_model({tiny, 0.0, 4, 1.0}));
  models.emplace_back("uneven", make_pflip_model({uneven, 0.3, 5, 1.0}));

  if (model_path) {
    const std::string label = "model " + model_path->string();
    try {
      JghmModel model = read_model(*model_path);
      const ValidationReport report = validate_model(model);
      for (const auto& e : report.errors) {
        result.lines.push_back("FAIL " + label + ": invariant violated: " + e);
        ++result.failures;
      }
      if (report.ok()) {
        if (oracle::configuration_count(model.topology) > oracle::kDefaultBudget) {
          result.lines.push_back("SKIP " + label + ": enumeration budget exceeded");
          ++result.skips;
        } else {
          models.emplace_back(label, std::move(model));
        }
      }
    } catch (const std::exception& e) {
      result.lines.push_back("FAIL " + label + ": " + e.what());
      ++result.failures;
    }
  }
  for (const auto& [label, model] : models) {
    try {
      selftest_model(label, model, result);
    } catch (const std::exception& e) {
      result.lines.push_back("FAIL " + label + ": " + e.what());
      ++result.failures;
    }
  }
  return result;
}

}  // namespace jghm
