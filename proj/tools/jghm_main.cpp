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

// Command-line driver for the JGHM laboratory.
//
//   jghm gen-model --config spec.json [--out DIR]
//   jghm sweep --config exp.json [--seed N] [--threads N] [--out DIR]
//   jghm zsc | cdm-sample | vlm --config exp.json
//   jghm export-dataset --config exp.json [--with-messages]
//   jghm selftest [--model model.json]
//
// Exit codes: 0 success, 1 invariant or acceptance failure, 2 usage or
// configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "jghm/harness.hpp"
#include "jghm/parallel.hpp"

namespace {

constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool with_messages = false;
  unsigned threads = 1;
  std::string model;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw jghm::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to DIR/name when an output directory is set, else to stdout.
void emit(const std::string& out_dir, const std::string& name, const std::string& content) {
  if (out_dir.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
  std::cerr << "wrote " << path.string() << "\n";
}

jghm::ExperimentConfig load(const Options& opt) {
  if (opt.config.empty()) throw jghm::ConfigError("--config is required");
  jghm::ExperimentConfig c = jghm::load_config(opt.config);
  if (opt.seed) c.seed = *opt.seed;
  return c;
}

std::string out_dir(const Options& opt, const jghm::ExperimentConfig& c) {
  if (!opt.out.empty()) return opt.out;
  return c.out_dir.value_or("");
}

int run(const std::string& command, const Options& opt) {
  if (command == "gen-model") {
    if (opt.config.empty()) throw jghm::ConfigError("--config is required");
    const jghm::GenModelResult r = jghm::cmd_gen_model(read_file(opt.config));
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << "effective B_psi = " << r.b_psi << "\n";
    emit(opt.out, "model.json", r.json);
    return 0;
  }
  if (command == "selftest") {
    std::optional<std::filesystem::path> model;
    if (!opt.model.empty()) model = opt.model;
    const jghm::SelftestResult r = jghm::cmd_selftest(model);
    for (const auto& line : r.lines) std::cout << line << "\n";
    std::cout << (r.failures == 0 ? "selftest passed" : "selftest FAILED") << " (" << r.failures
              << " failures, " << r.skips << " skipped)\n";
    return r.failures == 0 ? 0 : kExitInvariant;
  }

  const jghm::ExperimentConfig c = load(opt);
  const std::string dir = out_dir(opt, c);
  if (command == "sweep") {
    emit(dir, "sweep.csv", jghm::cmd_sweep(c));
  } else if (command == "export-dataset") {
    emit(dir, "dataset.jsonl", jghm::cmd_export_dataset(c, opt.with_messages));
  } else if (command == "zsc") {
    emit(dir, "zsc.json", jghm::cmd_zsc(c));
  } else if (command == "cdm-sample") {
    emit(dir, "cdm_sample.json", jghm::cmd_cdm_sample(c));
  } else if (command == "vlm") {
    emit(dir, "vlm.json", jghm::cmd_vlm(c));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint generative hierarchical model laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "JSON config (or model spec for gen-model)");
  app.add_option("--seed", opt.seed, "Override the config seed");
  app.add_option("--out", opt.out, "Output directory (default: stdout)");
  app.add_flag("--with-messages", opt.with_messages, "Include message stacks in dataset export");
  app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::Range(1u, 1024u));

  app.add_subcommand("gen-model", "Generate a p_flip model from a spec");
  app.add_subcommand("sweep", "Run a risk sweep and write CSV");
  app.add_subcommand("zsc", "Zero-shot class probabilities for one image");
  app.add_subcommand("cdm-sample", "Sample images for a text with the SDE sampler");
  app.add_subcommand("vlm", "Next-token posteriors for an image-text pair");
  app.add_subcommand("export-dataset", "Export samples (and messages) as JSONL");
  auto* selftest = app.add_subcommand("selftest", "Check message passing against enumeration");
  selftest->add_option("--model", opt.model, "Also check this model file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  jghm::set_thread_count(opt.threads);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opt);
  } catch (const jghm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const jghm::InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
}
