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

// Experiment configuration, the parallel (mode, seed) runner and report
// emission.

#pragma once

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oppo/adversary.hpp"
#include "oppo/agent.hpp"
#include "oppo/experiment.hpp"
#include "oppo/instances.hpp"
#include "oppo/io.hpp"
#include "oppo/oracles.hpp"
#include "oppo/policy_eval.hpp"
#include "oppo/policy_opt.hpp"

namespace oppo {

namespace fs = std::filesystem;

struct HyperSpec {
  long long episodes = 1;          // K
  std::optional<double> alpha;     // empty means "auto"
  double lambda = 1.0;
  double c_beta = 1.0;
  double zeta = 0.05;
  std::optional<double> beta;      // overrides the theory formula when set
};

struct AdversaryConfig {
  AdversaryKind kind;
  Json bases = Json::array();  // tables or generator objects; see resolve_bases
};

struct ExperimentConfig {
  InstanceSpec instance;
  bool instance_per_seed = false;  // instance seed := run seed
  AdversaryConfig adversary;
  std::vector<AgentMode> modes;
  HyperSpec hyper;
  std::vector<std::uint64_t> seeds;
  std::uint64_t master_seed = 0;
  std::string output_dir = "oppo_out";
  bool dump_eval = false;
  Json source;  // normalized document the hash is computed from
};

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(c.source.dump()); }

inline AdversaryConfig adversary_config_from_json(const Json& j) {
  AdversaryConfig a;
  const AdversaryType type = adversary_type_from_string(j.value("kind", std::string("Fixed")));
  switch (type) {
    case AdversaryType::Fixed: a.kind = AdversaryKind::fixed(); break;
    case AdversaryType::PeriodicSwitch: {
      const int period = required<int>(j, "period");
      if (period < 1) throw InvalidInput("adversary.period must be >= 1");
      a.kind = AdversaryKind::periodic(period);
      break;
    }
    case AdversaryType::AdaptiveAvoid: {
      const double strength = required<double>(j, "strength");
      if (!(strength >= 0.0 && strength <= 1.0)) throw InvalidInput("adversary.strength must lie in [0, 1]");
      a.kind = AdversaryKind::adaptive_avoid(strength);
      break;
    }
  }
  if (j.contains("bases")) {
    if (!j.at("bases").is_array()) throw InvalidInput("adversary.bases must be an array");
    a.bases = j.at("bases");
  }
  return a;
}

inline Json adversary_config_to_json(const AdversaryConfig& a) {
  Json j{{"kind", to_string(a.kind.type)}, {"bases", a.bases}};
  if (a.kind.type == AdversaryType::PeriodicSwitch) j["period"] = a.kind.period;
  if (a.kind.type == AdversaryType::AdaptiveAvoid) j["strength"] = a.kind.strength;
  return j;
}

inline HyperSpec hyper_spec_from_json(const Json& j) {
  HyperSpec h;
  h.episodes = required<long long>(j, "K");
  if (h.episodes < 1) throw InvalidInput("hyperparams.K must be >= 1");
  if (j.contains("alpha")) {
    const Json& a = j.at("alpha");
    if (a.is_string()) {
      if (a.get<std::string>() != "auto") throw InvalidInput("hyperparams.alpha must be a number or \"auto\"");
    } else if (a.is_number()) {
      h.alpha = a.get<double>();
      if (!(*h.alpha >= 0.0) || !std::isfinite(*h.alpha)) throw InvalidInput("hyperparams.alpha must be >= 0");
    } else {
      throw InvalidInput("hyperparams.alpha must be a number or \"auto\"");
    }
  }
  h.lambda = j.value("lambda", 1.0);
  h.c_beta = j.value("c_beta", 1.0);
  h.zeta = j.value("zeta", 0.05);
  if (j.contains("beta")) h.beta = j.at("beta").get<double>();
  if (!(h.lambda > 0.0)) throw InvalidInput("hyperparams.lambda must be positive");
  if (!(h.c_beta > 0.0)) throw InvalidInput("hyperparams.c_beta must be positive");
  if (!(h.zeta > 0.0 && h.zeta <= 1.0)) throw InvalidInput("hyperparams.zeta must lie in (0, 1]");
  if (h.beta && !(*h.beta >= 0.0)) throw InvalidInput("hyperparams.beta must be >= 0");
  return h;
}

inline Json hyper_spec_to_json(const HyperSpec& h) {
  Json j{{"K", h.episodes}, {"lambda", h.lambda}, {"c_beta", h.c_beta}, {"zeta", h.zeta}};
  j["alpha"] = h.alpha ? Json(*h.alpha) : Json("auto");
  if (h.beta) j["beta"] = *h.beta;
  return j;
}

/// Parses and validates a config document. Unknown top-level keys are
/// rejected so typos do not silently fall back to defaults.
inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  static const std::set<std::string> known{"instance", "instance_per_seed", "adversary", "modes", "hyperparams",
                                           "seeds", "master_seed", "output_dir", "dump"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw InvalidInput("unknown config key: " + key);
  ExperimentConfig c;
  c.instance = instance_spec_from_json(j.at("instance"));
  c.instance_per_seed = j.value("instance_per_seed", false);
  c.adversary = adversary_config_from_json(j.value("adversary", Json::object()));
  const Json modes = j.value("modes", Json::array({"OPPO"}));
  if (!modes.is_array() || modes.empty()) throw InvalidInput("modes must be a non-empty array");
  for (const auto& m : modes) {
    const AgentMode mode = agent_mode_from_string(m.get<std::string>());
    if (std::find(c.modes.begin(), c.modes.end(), mode) != c.modes.end()) throw InvalidInput("duplicate mode");
    c.modes.push_back(mode);
  }
  c.hyper = hyper_spec_from_json(j.at("hyperparams"));
  const Json& seeds = j.at("seeds");
  if (!seeds.is_array() || seeds.empty()) throw InvalidInput("seeds must be a non-empty array");
  for (const auto& s : seeds) {
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw InvalidInput("seeds must be non-negative integers");
    const auto v = s.get<std::uint64_t>();
    if (std::find(c.seeds.begin(), c.seeds.end(), v) != c.seeds.end()) throw InvalidInput("duplicate seed");
    c.seeds.push_back(v);
  }
  c.master_seed = j.value("master_seed", std::uint64_t{0});
  c.output_dir = j.value("output_dir", std::string("oppo_out"));
  if (j.contains("dump")) c.dump_eval = j.at("dump").value("eval", false);

  Json modes_out = Json::array();
  for (auto m : c.modes) modes_out.push_back(to_string(m));
  c.source = {{"instance", instance_spec_to_json(c.instance)},
              {"instance_per_seed", c.instance_per_seed},
              {"adversary", adversary_config_to_json(c.adversary)},
              {"modes", modes_out},
              {"hyperparams", hyper_spec_to_json(c.hyper)},
              {"seeds", c.seeds},
              {"master_seed", c.master_seed}};
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) { return config_from_json(read_json_file(path)); }

/// Instance spec actually simulated for a run seed.
inline InstanceSpec instance_for_seed(const ExperimentConfig& c, std::uint64_t seed) {
  InstanceSpec s = c.instance;
  if (c.instance_per_seed) s.seed = seed;
  return s;
}

/// Identity used to refuse mixing logs from different instances.
inline std::string instance_id(const ExperimentConfig& c) {
  Json j = instance_spec_to_json(c.instance);
  if (c.instance_per_seed) j["seed"] = "per-run";
  return j.dump();
}

/// Hyperparameters for an instance: alpha "auto" resolves to
/// sqrt(2 log|A| / (H T)) and beta to c_beta sqrt(d H^2 log(d T / zeta)),
/// with T = H K.
inline HyperParams resolve_hyper(const HyperSpec& spec, int horizon, int num_actions, int dim) {
  HyperParams h;
  h.episodes = spec.episodes;
  h.lambda = spec.lambda;
  h.c_beta = spec.c_beta;
  h.zeta = spec.zeta;
  const long long T = static_cast<long long>(horizon) * spec.episodes;
  h.alpha = spec.alpha ? *spec.alpha : StepSize::theory_default(num_actions, horizon, T).value();
  h.beta = spec.beta ? *spec.beta : BonusParams::theory(spec.c_beta, dim, horizon, T, spec.zeta).beta;
  return h;
}

/// Base reward list. Entries are either explicit [h][x][a] tables or objects
///   {"generator": "uniform", "seed": n}     i.i.d. U[0, 1) entries
///   {"generator": "constant", "value": v}
///   {"generator": "lock"}                   the combination-lock payoff
/// An empty list means the lock payoff for lock instances and a uniform
/// reward seeded by the instance seed otherwise.
inline std::vector<RewardFunction> resolve_bases(const Json& bases, const InstanceSpec& spec,
                                                 const std::optional<RewardFunction>& lock_reward) {
  const int H = spec.horizon, S = spec.num_states, A = spec.num_actions;
  std::vector<RewardFunction> out;
  auto lock = [&]() {
    if (!lock_reward) throw InvalidInput("the lock reward generator needs a combination-lock instance");
    return *lock_reward;
  };
  if (bases.empty()) {
    out.push_back(lock_reward ? *lock_reward : random_reward(H, S, A, spec.seed));
    return out;
  }
  for (const auto& b : bases) {
    RewardFunction r;
    if (b.is_array()) {
      r = reward_from_json(b);
    } else if (b.is_object()) {
      const std::string gen = required<std::string>(b, "generator");
      if (gen == "uniform") {
        r = random_reward(H, S, A, required<std::uint64_t>(b, "seed"));
      } else if (gen == "constant") {
        r = RewardFunction::constant(H, S, A, required<double>(b, "value"));
      } else if (gen == "lock") {
        r = lock();
      } else {
        throw InvalidInput("unknown reward generator: " + gen);
      }
    } else {
      throw InvalidInput("adversary bases entries must be tables or generator objects");
    }
    if (r.horizon() != H) throw InvalidInput("base reward horizon mismatch");
    for (const auto& t : r.r)
      if (t.rows() != S || t.cols() != A) throw InvalidInput("base reward table has the wrong shape");
    if (!validate_reward(r).ok()) throw InvalidInput("base reward has entries outside [0, 1]");
    out.push_back(std::move(r));
  }
  return out;
}

struct PreparedInstance {
  InstanceSpec spec;
  LinearMDP mdp;
  ExactModel model;
  AdversarySetup adversary;
};

inline PreparedInstance prepare_instance(const ExperimentConfig& c, std::uint64_t seed) {
  const InstanceSpec spec = instance_for_seed(c, seed);
  std::optional<RewardFunction> lock_reward;
  LinearMDP mdp;
  if (spec.kind == InstanceKind::CombinationLock) {
    CombinationLock lock = combination_lock(spec);
    mdp = std::move(lock.mdp);
    lock_reward = std::move(lock.reward);
  } else {
    mdp = make_instance(spec);
  }
  ExactModel model = ExactModel::from(mdp);
  AdversarySetup adv{c.adversary.kind, resolve_bases(c.adversary.bases, spec, lock_reward)};
  return {spec, std::move(mdp), std::move(model), std::move(adv)};
}

/// Checks the config and every instance it would simulate.
inline ValidationReport validate_config(const ExperimentConfig& c) {
  ValidationReport rep;
  std::vector<std::uint64_t> seeds{c.seeds.front()};
  if (c.instance_per_seed) seeds = c.seeds;
  for (auto s : seeds) {
    const PreparedInstance p = prepare_instance(c, s);
    const ValidationReport r = validate_linear_mdp(p.mdp, 8, derive_seed(c.master_seed, {s, 0x76616cULL}));
    rep.violations.insert(rep.violations.end(), r.violations.begin(), r.violations.end());
  }
  return rep;
}

/// Worker count: OPPO_LAB_THREADS when set to a positive integer, otherwise
/// the hardware concurrency, never more than the number of cells.
inline unsigned worker_count(std::size_t cells) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("OPPO_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, cells)));
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// in index order is rethrown after every worker has stopped.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      if (failed) break;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string log_file_name(const std::string& mode, std::uint64_t seed) {
  return mode + "-seed" + std::to_string(seed) + ".json";
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* kCsvHeader =
    "mode,seed,k,inst_regret,cum_regret,term_i,term_ii,term_iii,bonus_sum,optimism_violations\n";

inline std::string regret_csv(const std::vector<RunLog>& logs) {
  std::string out = kCsvHeader;
  for (const auto& log : logs)
    for (const auto& e : log.episodes) {
      const auto& r = e.regret;
      out += log.mode + ',' + std::to_string(log.seed) + ',' + std::to_string(r.episode) + ',' +
             format_double(r.instantaneous) + ',' + format_double(r.cumulative) + ',' + format_double(r.term_i) +
             ',' + format_double(r.term_ii) + ',' + format_double(r.term_iii) + ',' + format_double(e.bonus_sum) +
             ',' + std::to_string(e.optimism_violations()) + '\n';
    }
  return out;
}

inline Json json_number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

/// Per-mode median and IQR of cumulative regret at k in {100, 500, 1000, K}
/// (those not exceeding K) and the log-log slope of the median curve over
/// [K/10, K].
inline Json summary_json(const std::vector<RunLog>& logs) {
  if (logs.empty()) throw InvalidInput("no run logs to summarize");
  std::map<std::string, std::vector<const RunLog*>> by_mode;
  std::vector<std::string> order;
  for (const auto& l : logs) {
    if (!by_mode.count(l.mode)) order.push_back(l.mode);
    by_mode[l.mode].push_back(&l);
  }
  Json modes = Json::object();
  for (const auto& mode : order) {
    const auto& group = by_mode[mode];
    const auto K = static_cast<long long>(group.front()->episodes.size());
    for (const auto* l : group)
      if (static_cast<long long>(l->episodes.size()) != K) throw InvalidInput("logs of one mode differ in K");
    std::vector<long long> checkpoints;
    for (long long k : {100LL, 500LL, 1000LL, K})
      if (k <= K && std::find(checkpoints.begin(), checkpoints.end(), k) == checkpoints.end()) checkpoints.push_back(k);
    Json cps = Json::array();
    for (long long k : checkpoints) {
      std::vector<double> vals;
      for (const auto* l : group) vals.push_back(l->episodes[static_cast<std::size_t>(k - 1)].regret.cumulative);
      const double q1 = quantile(vals, 0.25), q3 = quantile(vals, 0.75);
      cps.push_back({{"k", k}, {"median", median(vals)}, {"q25", q1}, {"q75", q3}, {"iqr", q3 - q1}});
    }
    const std::vector<double> curve = median_cumulative_curve(group);
    const long long k_lo = std::max(1LL, K / 10);
    long long upper = 0, points = 0;
    std::vector<long long> seeds;
    for (const auto* l : group) {
      seeds.push_back(static_cast<long long>(l->seed));
      for (const auto& e : l->episodes) {
        upper += e.optimism_upper;
        points += e.optimism_points;
      }
    }
    modes[mode] = {{"runs", group.size()},
                   {"K", K},
                   {"checkpoints", std::move(cps)},
                   {"loglog_slope", json_number_or_null(loglog_slope(curve, k_lo, K))},
                   {"slope_window", {k_lo, K}},
                   {"optimism_violation_rate",
                    points ? Json(static_cast<double>(upper) / static_cast<double>(points)) : Json(nullptr)}};
  }
  return {{"instance_id", logs.front().instance_id}, {"config_hash", logs.front().config_hash}, {"modes", modes}};
}

/// Logs ordered by agent mode, then numeric seed. Reports use this order so
/// `run` and `report` on the same logs produce identical files.
inline std::vector<RunLog> canonical_order(std::vector<RunLog> logs) {
  std::stable_sort(logs.begin(), logs.end(), [](const RunLog& a, const RunLog& b) {
    const auto ma = agent_mode_from_string(a.mode), mb = agent_mode_from_string(b.mode);
    return ma != mb ? ma < mb : a.seed < b.seed;
  });
  return logs;
}

/// Writes regret.csv and summary.json under `out`. Logs must share an
/// instance.
inline void emit_report(const std::vector<RunLog>& logs, const fs::path& out) {
  if (logs.empty()) throw InvalidInput("no run logs to report");
  for (const auto& l : logs)
    if (l.instance_id != logs.front().instance_id) throw InvalidInput("run logs come from different instances");
  const std::vector<RunLog> sorted = canonical_order(logs);
  write_file_atomic(out / "regret.csv", regret_csv(sorted));
  write_file_atomic(out / "summary.json", summary_json(sorted).dump(2) + "\n");
}

/// Reads every run log in dir (or dir/logs) in file-name order.
inline std::vector<RunLog> load_run_logs(const fs::path& dir) {
  fs::path logs_dir = fs::is_directory(dir / "logs") ? dir / "logs" : dir;
  if (!fs::is_directory(logs_dir)) throw InvalidInput("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(logs_dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunLog> out;
  for (const auto& f : files) {
    const Json j = read_json_file(f);
    if (!j.is_object() || !j.contains("episodes")) continue;
    out.push_back(run_log_from_json(j));
  }
  if (out.empty()) throw InvalidInput("no run logs found in " + logs_dir.string());
  return out;
}

// ---------------------------------------------------------------------------
// Experiments.

struct RunOptions {
  bool write = true;          // write logs and the report under output_dir
  bool dump_eval = false;     // also write per-episode evaluation tables
};

/// Runs every (mode, seed) cell. Logs come back in (mode, seed) config order
/// regardless of scheduling. Nothing is written if any cell fails.
inline std::vector<RunLog> run_experiment(const ExperimentConfig& c, const RunOptions& opts = {}) {
  const std::string hash = config_hash(c);
  const std::string inst_id = instance_id(c);
  const bool dump = opts.dump_eval || c.dump_eval;

  std::map<std::uint64_t, std::shared_ptr<const PreparedInstance>> instances;
  for (auto s : c.seeds) {
    const std::uint64_t key = c.instance_per_seed ? s : 0;
    if (instances.count(key)) continue;
    auto p = std::make_shared<const PreparedInstance>(prepare_instance(c, s));
    const ValidationReport rep = validate_linear_mdp(p->mdp, 8, derive_seed(c.master_seed, {s, 0x76616cULL}));
    if (!rep.ok()) throw InvalidInput("instance validation failed: " + rep.summary());
    instances.emplace(key, std::move(p));
  }

  struct Cell {
    AgentMode mode;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (auto m : c.modes)
    for (auto s : c.seeds) cells.push_back({m, s});
  std::vector<RunLog> logs(cells.size());
  std::vector<std::string> dumps(cells.size());

  parallel_for(cells.size(), worker_count(cells.size()), [&](std::size_t i) {
    const Cell& cell = cells[i];
    const PreparedInstance& inst = *instances.at(c.instance_per_seed ? cell.seed : 0);
    const HyperParams hyper = resolve_hyper(c.hyper, inst.spec.horizon, inst.spec.num_actions, inst.mdp.dim());
    CellOptions co;
    std::string& dump_text = dumps[i];
    if (dump) {
      co.on_evaluation = [&dump_text](int k, const Evaluation& e) {
        const Json line{{"k", k},
                        {"q", tables_to_json(e.values.q)},
                        {"q_bar", tables_to_json(e.q_bar)},
                        {"gamma", tables_to_json(e.gamma)}};
        dump_text += line.dump() + "\n";
      };
    }
    CellResult res = run_cell(inst.mdp, inst.model, inst.adversary, cell.mode, hyper,
                              derive_seed(c.master_seed, {cell.seed}), co);
    res.log.seed = cell.seed;
    res.log.config_hash = hash;
    res.log.instance_id = inst_id;
    logs[i] = std::move(res.log);
  });

  if (opts.write) {
    const fs::path out(c.output_dir);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string name = log_file_name(logs[i].mode, logs[i].seed);
      write_file_atomic(out / "logs" / name, run_log_to_json(logs[i]).dump() + "\n");
      if (dump) write_file_atomic(out / "eval" / (name + "l"), dumps[i]);
    }
    write_file_atomic(out / "config.json", c.source.dump(2) + "\n");
    emit_report(logs, out);
  }
  return logs;
}

/// Grid: {"alpha": [...], "c_beta": [...], "lambda": [...], "zeta": [...],
/// "K": [...], "beta": [...]}. Every combination runs into
/// output_dir/sweep-NNN with its own report; an index file lists the points.
inline Json sweep(const ExperimentConfig& base, const Json& grid, const RunOptions& opts = {}) {
  if (!grid.is_object() || grid.empty()) throw InvalidInput("grid must be a non-empty object");
  static const std::set<std::string> knobs{"alpha", "c_beta", "lambda", "zeta", "K", "beta"};
  std::vector<std::pair<std::string, std::vector<Json>>> axes;
  for (const auto& [key, values] : grid.items()) {
    if (!knobs.count(key)) throw InvalidInput("unknown sweep parameter: " + key);
    if (!values.is_array() || values.empty()) throw InvalidInput("sweep values for " + key + " must be a non-empty array");
    axes.emplace_back(key, std::vector<Json>(values.begin(), values.end()));
  }
  std::vector<std::size_t> idx(axes.size(), 0);
  Json index = Json::array();
  for (int point = 0;; ++point) {
    Json doc = base.source;
    Json params = Json::object();
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const Json& v = axes[a].second[idx[a]];
      doc["hyperparams"][axes[a].first] = v;
      params[axes[a].first] = v;
    }
    char dir[32];
    std::snprintf(dir, sizeof dir, "sweep-%03d", point);
    ExperimentConfig cfg = config_from_json(doc);
    cfg.output_dir = (fs::path(base.output_dir) / dir).string();
    cfg.dump_eval = base.dump_eval;
    const std::vector<RunLog> logs = run_experiment(cfg, opts);
    index.push_back({{"dir", dir}, {"params", params}, {"summary", summary_json(logs)}});

    // Odometer increment, last axis fastest.
    bool done = true;
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++idx[a] < axes[a].second.size()) {
        done = false;
        break;
      }
      idx[a] = 0;
    }
    if (done) break;
  }
  if (opts.write) write_file_atomic(fs::path(base.output_dir) / "sweep.json", index.dump(2) + "\n");
  return index;
}

}  // namespace oppo
