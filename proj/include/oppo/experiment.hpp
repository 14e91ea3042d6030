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

// One experiment cell: K episodes of an agent against an adversary on a
// fixed instance, followed by exact regret accounting.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oppo/adversary.hpp"
#include "oppo/agent.hpp"
#include "oppo/common.hpp"
#include "oppo/mdp_core.hpp"
#include "oppo/oracles.hpp"

namespace oppo {

inline constexpr double kOptimismTol = 1e-9;
inline constexpr double kResidualAbortTol = 1e-4;

struct AdversarySetup {
  AdversaryKind kind;
  std::vector<RewardFunction> bases;
};

struct EpisodeLog {
  RegretRecord regret;
  double bonus_sum = 0.0;        // sum_h Gamma^k_h(x_h, a_h)
  int optimism_upper = 0;        // points with iota > tol
  int optimism_lower = 0;        // points with iota < -2 Gamma - tol
  int optimism_points = 0;       // H * S * A, or 0 when not evaluated
  double max_abs_d = 0.0;        // max_h max(|D_{k,h,1}|, |D_{k,h,2}|)

  int optimism_violations() const { return optimism_upper + optimism_lower; }
};

struct RunLog {
  std::string config_hash;
  std::string instance_id;
  std::string mode;
  std::uint64_t seed = 0;
  HyperParams hyper;
  std::vector<EpisodeLog> episodes;
  double wall_clock_seconds = 0.0;
};

struct CellOptions {
  bool keep_features = false;  // retain the per-step regressor sequences
  /// Called after each evaluated episode; used for --dump-eval.
  std::function<void(int episode, const Evaluation&)> on_evaluation;
};

struct CellResult {
  RunLog log;
  std::vector<std::vector<Vector>> features;  // per step, regressors in episode order
};

inline std::uint64_t mode_stream_id(AgentMode m) { return static_cast<std::uint64_t>(m) + 1; }

/// Runs K = hyper.episodes episodes for one (mode, seed). Per-episode streams
/// are derived from (seed, mode, k) so cells never share randomness.
inline CellResult run_cell(const LinearMDP& mdp, const ExactModel& model, const AdversarySetup& adversary,
                           AgentMode mode, const HyperParams& hyper, std::uint64_t seed,
                           const CellOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  const int H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
  const long long K = hyper.episodes;
  if (K < 1) throw InvalidInput("number of episodes must be >= 1");

  Agent agent(mdp.features(), H, mode, hyper);
  History history;
  std::vector<Policy> policies;
  std::vector<StepTables> q_tables;
  std::vector<std::vector<Vector>> v_tables;
  std::vector<EpisodeLog> logs(static_cast<std::size_t>(K));
  policies.reserve(static_cast<std::size_t>(K));
  q_tables.reserve(static_cast<std::size_t>(K));
  v_tables.reserve(static_cast<std::size_t>(K));
  const ValueTables zeros = ValueTables::zeros(H, S, A);

  for (long long k = 1; k <= K; ++k) {
    const auto uk = static_cast<std::uint64_t>(k);
    Rng adv_rng = make_rng(seed, {mode_stream_id(mode), uk, 1});
    const RewardFunction reward = next_reward(adversary.kind, history, adversary.bases, adv_rng);
    const Policy& policy = agent.begin_episode();
    Rng env_rng = make_rng(seed, {mode_stream_id(mode), uk, 2});
    Trajectory traj = run_episode(mdp, policy, reward, env_rng, static_cast<int>(k));
    policies.push_back(policy);
    const std::optional<Evaluation> eval = agent.end_episode(traj, reward);

    EpisodeLog& log = logs[static_cast<std::size_t>(k - 1)];
    if (eval) {
      const PredictionErrorTable err = prediction_error_table(model, reward, eval->values.q, eval->values.v);
      for (int h = 0; h < H; ++h) {
        const auto sh = static_cast<std::size_t>(h);
        log.bonus_sum += eval->gamma[sh](traj.states[sh], traj.actions[sh]);
        const auto& iota = err.iota[sh];
        const auto& gamma = eval->gamma[sh];
        for (int x = 0; x < S; ++x)
          for (int a = 0; a < A; ++a) {
            if (iota(x, a) > kOptimismTol) ++log.optimism_upper;
            if (iota(x, a) < -2.0 * gamma(x, a) - kOptimismTol) ++log.optimism_lower;
          }
      }
      log.optimism_points = H * S * A;
      if (options.on_evaluation) options.on_evaluation(static_cast<int>(k), *eval);
      q_tables.push_back(eval->values.q);
      v_tables.push_back(eval->values.v);
    } else {
      q_tables.push_back(zeros.q);
      v_tables.push_back(zeros.v);
    }
    history.append(std::move(traj), reward);
  }

  const Policy star = hindsight_optimal_policy(model, history.rewards());
  const auto occ_star = state_occupancy(model, star);
  double cum = 0.0;
  for (long long k = 0; k < K; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const EpisodeArtifacts ep{&policies[uk], &q_tables[uk], &v_tables[uk], &history.trajectories()[uk],
                              &history.rewards()[uk]};
    const DecompositionTerms terms = decomposition_terms(model, star, occ_star, ep);
    if (!(std::abs(terms.residual) <= kResidualAbortTol)) {
      std::ostringstream os;
      os << "regret decomposition residual " << terms.residual << " at episode " << k + 1
         << " exceeds " << kResidualAbortTol;
      throw std::runtime_error(os.str());
    }
    EpisodeLog& log = logs[uk];
    RegretRecord& rec = log.regret;
    rec.episode = static_cast<int>(k) + 1;
    rec.instantaneous = terms.instantaneous;
    rec.v_star = exact_policy_value(model, star, history.rewards()[uk]).v[0][model.initial_state];
    rec.v_policy = rec.v_star - rec.instantaneous;
    cum += rec.instantaneous;
    rec.cumulative = cum;
    rec.term_i = terms.term_i;
    rec.term_ii = terms.term_ii;
    rec.term_iii = terms.term_iii;
    rec.residual = terms.residual;
    for (int h = 0; h < H; ++h)
      log.max_abs_d = std::max({log.max_abs_d, std::abs(terms.d1[static_cast<std::size_t>(h)]),
                                std::abs(terms.d2[static_cast<std::size_t>(h)])});
  }

  CellResult out;
  out.log.mode = to_string(mode);
  out.log.seed = seed;
  out.log.hyper = hyper;
  out.log.episodes = std::move(logs);
  if (options.keep_features) {
    for (const auto& buf : agent.state().history) out.features.push_back(buf.features);
  }
  out.log.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Median of a copy of the values.
inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Linear-interpolated quantile, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidInput("quantile of empty list");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Least-squares slope of log(y) against log(k) over k in [k_lo, k_hi]
/// (1-based episode indices into y). Points with y <= 0 are skipped; returns
/// NaN with fewer than two usable points.
inline double loglog_slope(const std::vector<double>& y, long long k_lo, long long k_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long long n = 0;
  for (long long k = std::max(1LL, k_lo); k <= k_hi && k <= static_cast<long long>(y.size()); ++k) {
    const double yk = y[static_cast<std::size_t>(k - 1)];
    if (!(yk > 0.0)) continue;
    const double lx = std::log(static_cast<double>(k)), ly = std::log(yk);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (denom == 0.0) return std::nan("");
  return (nn * sxy - sx * sy) / denom;
}

/// Per-episode median of cumulative regret across logs of equal length.
inline std::vector<double> median_cumulative_curve(const std::vector<const RunLog*>& logs) {
  if (logs.empty()) return {};
  const std::size_t K = logs.front()->episodes.size();
  std::vector<double> out(K);
  std::vector<double> column(logs.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < logs.size(); ++i) {
      if (logs[i]->episodes.size() != K) throw InvalidInput("logs have different episode counts");
      column[i] = logs[i]->episodes[k].regret.cumulative;
    }
    out[k] = median(column);
  }
  return out;
}

}  // namespace oppo
