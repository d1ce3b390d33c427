// Copyright 2026 the repro-dp authors
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
//
// repro-dp: batch experiment runner. Subcommands run one inference task
// from a JSON config and emit CSV (stdout, or an atomically written file).
//
//   repro-dp ci|pvalue|grid|replicate --config <file> [--jobs N] [--seed S] [--out path]
//
// Exit codes: 0 success, 2 config error, 3 numeric error,
// 4 replicate failure rate above 1%.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "reprodp/experiment.hpp"

namespace {

// Writes CSV either to stdout or to `path` via temp-file rename, so a
// failed run never leaves a partial output file behind.
void emit(const std::string& csv, const std::string& path) {
  if (path.empty()) {
    std::cout << csv;
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw reprodp::ConfigError("cannot open output file: " + tmp);
    out << csv;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw reprodp::NumericError("failed writing output file: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw reprodp::ConfigError("cannot move output into place: " + path);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repro-dp: simulation-based inference from private summaries"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int jobs_override = 0;

  std::string command;
  for (const std::string name : {"ci", "pvalue", "grid", "replicate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required();
    sub->add_option("--jobs", jobs_override, "worker threads over replicates");
    sub->add_option("--seed", seed_override, "override master_seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_override, "output CSV path (default stdout)");
    sub->callback([&command, name]() { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "repro-dp: cannot read config: " << config_path << "\n";
      return 2;
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "repro-dp: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
    reprodp::ExperimentConfig cfg = reprodp::parse_config(j);
    if (seed_set) cfg.master_seed = seed_override;
    if (jobs_override > 0) cfg.jobs = jobs_override;
    if (!out_override.empty()) cfg.out = out_override;

    std::string csv;
    int rc = 0;
    if (command == "ci") {
      rc = reprodp::cmd_ci(cfg, &csv);
    } else if (command == "pvalue") {
      rc = reprodp::cmd_pvalue(cfg, &csv);
    } else if (command == "grid") {
      rc = reprodp::cmd_grid(cfg, &csv);
    } else {
      rc = reprodp::cmd_replicate(cfg, &csv);
    }
    emit(csv, cfg.out);
    return rc;
  } catch (const reprodp::ConfigError& e) {
    std::cerr << "repro-dp: config error: " << e.what() << "\n";
    return 2;
  } catch (const reprodp::InvalidArgument& e) {
    std::cerr << "repro-dp: config error: " << e.what() << "\n";
    return 2;
  } catch (const reprodp::Error& e) {
    std::cerr << "repro-dp: numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "repro-dp: error: " << e.what() << "\n";
    return 3;
  }
}
