// Copyright 2026 The ddsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ddsim/cli.hpp"
#include "ddsim/parallel.hpp"

namespace {

struct VerbArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  bool dump_sequence = false;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace ddsim::cli;

  CLI::App app{"ddsim: dynamical decoupling simulator for a qubit in a nuclear spin bath"};
  app.set_version_flag("--version", std::string(ddsim::kVersion));
  app.require_subcommand(1);
  unsigned threads = ddsim::default_thread_count();
  app.add_option("--threads", threads, "worker cap (default: DDSIM_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  std::map<std::string, VerbArgs> verbs;
  for (const auto& name : commands()) verbs[name];
  for (auto& [name, args] : verbs) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", args.config_path, "key = value configuration file");
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_flag("--dump-sequence", args.dump_sequence,
                  "print the configured pulse schedule and exit");
    for (const auto& key : schema()) {
      auto* opt = sub->add_option_function<std::string>(
          std::string("--") + key.name,
          [&args, k = std::string(key.name)](const std::string& v) { args.overrides[k] = v; },
          key.help);
      opt->type_name(key.default_value ? std::string("[") + key.default_value + "]" : "VALUE");
    }
  }

  std::string replay_meta;
  std::optional<std::string> replay_output;
  CLI::App* replay = app.add_subcommand("replay", "rerun the configuration recorded in a sidecar");
  replay->add_option("meta", replay_meta, "<output>.meta.json")->required();
  replay->add_option("-o,--output", replay_output, "write here instead of the recorded path");
  replay->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (replay->parsed()) {
      std::string text;
      {
        std::ifstream in(replay_meta, std::ios::binary);
        if (!in) throw ddsim::ConfigError("cannot open sidecar '" + replay_meta + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      }
      return run(config_from_sidecar(text, replay_output, threads));
    }
    for (auto& [name, args] : verbs) {
      if (!app.got_subcommand(name)) continue;
      std::string file_text;
      if (!args.config_path.empty()) {
        std::ifstream in(args.config_path, std::ios::binary);
        if (!in) throw ddsim::ConfigError("cannot open config '" + args.config_path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        file_text = ss.str();
      }
      if (args.dump_sequence) {
        // Reuse the dump-sequence command on the same settings, to stdout.
        auto overrides = args.overrides;
        overrides["output"] = "-";
        return run(parse_config("dump-sequence", file_text, overrides, threads));
      }
      return run(parse_config(name, file_text, args.overrides, threads));
    }
  } catch (const ddsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
