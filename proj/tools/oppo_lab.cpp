// Copyright 2026 The OPPO Lab Authors. All Rights Reserved.
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

// oppo_lab: validate, run, sweep, check-lemmas, report.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oppo/harness.hpp"
#include "oppo/lemmas.hpp"

namespace {

int cmd_validate(const std::string& path) {
  const oppo::ExperimentConfig cfg = oppo::load_config(path);
  const oppo::ValidationReport rep = oppo::validate_config(cfg);
  std::cout << "config " << oppo::config_hash(cfg) << ": " << (rep.ok() ? "ok" : rep.summary()) << "\n";
  return rep.ok() ? 0 : 1;
}

int cmd_run(const std::string& path, const std::string& out, bool dump_eval) {
  oppo::ExperimentConfig cfg = oppo::load_config(path);
  if (!out.empty()) cfg.output_dir = out;
  oppo::RunOptions opts;
  opts.dump_eval = dump_eval;
  const auto logs = oppo::run_experiment(cfg, opts);
  const oppo::Json summary = oppo::summary_json(logs);
  std::cout << "wrote " << logs.size() << " run logs to " << cfg.output_dir << "\n";
  for (const auto& [mode, s] : summary.at("modes").items()) {
    const auto& last = s.at("checkpoints").back();
    std::cout << "  " << mode << ": median cum_regret@" << last.at("k") << " = " << last.at("median").get<double>()
              << ", slope = " << s.at("loglog_slope") << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& path, const std::string& grid_path, const std::string& out, bool dump_eval) {
  oppo::ExperimentConfig cfg = oppo::load_config(path);
  if (!out.empty()) cfg.output_dir = out;
  oppo::RunOptions opts;
  opts.dump_eval = dump_eval;
  const oppo::Json index = oppo::sweep(cfg, oppo::read_json_file(grid_path), opts);
  std::cout << "ran " << index.size() << " grid points under " << cfg.output_dir << "\n";
  return 0;
}

int cmd_check_lemmas(int seeds, const std::string& sizes_json) {
  oppo::SizeBounds b;
  if (!sizes_json.empty()) {
    const oppo::Json j = oppo::Json::parse(sizes_json);
    b.max_horizon = j.value("H", b.max_horizon);
    b.max_states = j.value("S", b.max_states);
    b.max_actions = j.value("A", b.max_actions);
  }
  const oppo::LemmaReport rep = oppo::check_lemmas(seeds, b);
  for (const auto& r : rep.results)
    std::printf("%-4s %-46s %-5s checks=%lld %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.hard ? "hard" : "stat", r.checks, r.detail.c_str());
  return rep.hard_ok() ? 0 : 1;
}

int cmd_report(const std::string& dir) {
  const auto logs = oppo::load_run_logs(dir);
  oppo::emit_report(logs, dir);
  std::cout << "report for " << logs.size() << " run logs written to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OPPO experiment lab"};
  app.require_subcommand(1);

  std::string config, grid, out, logdir, sizes;
  bool dump_eval = false;
  int seeds = 100;

  auto* validate = app.add_subcommand("validate", "check a config and the instances it describes");
  validate->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "run every (mode, seed) cell and write logs plus a report");
  run->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "override output_dir");
  run->add_flag("--dump-eval", dump_eval, "write per-episode Q, Q_bar and bonus tables");

  auto* sweep = app.add_subcommand("sweep", "run the config over a hyperparameter grid");
  sweep->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid, "grid file (JSON object of value lists)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "override output_dir");
  sweep->add_flag("--dump-eval", dump_eval, "write per-episode evaluation tables");

  auto* lemmas = app.add_subcommand("check-lemmas", "run the property suite");
  lemmas->add_option("--seeds", seeds, "number of random instances per property")->check(CLI::PositiveNumber);
  lemmas->add_option("--sizes", sizes, R"(size bounds, e.g. {"H":5,"S":6,"A":4})");

  auto* report = app.add_subcommand("report", "rebuild regret.csv and summary.json from run logs");
  report->add_option("logdir", logdir, "directory holding run logs")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*run) return cmd_run(config, out, dump_eval);
    if (*sweep) return cmd_sweep(config, grid, out, dump_eval);
    if (*lemmas) return cmd_check_lemmas(seeds, sizes);
    if (*report) return cmd_report(logdir);
  } catch (const oppo::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
