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

// Episode loop of optimistic PPO and the baselines that share its
// evaluation machinery.
//
// Protocol per episode k:
//   policy = agent.begin_episode();        // pi^k from pi^{k-1}, Q^{k-1}
//   ... environment rolls out policy, adversary reveals r^k ...
//   agent.end_episode(trajectory, r^k);    // Q^k, history append, k += 1
//
// The agent holds the feature map only; transition parameters are never
// visible to it.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oppo/common.hpp"
#include "oppo/mdp_core.hpp"
#include "oppo/policy.hpp"
#include "oppo/policy_eval.hpp"
#include "oppo/policy_opt.hpp"

namespace oppo {

enum class AgentMode { OPPO, GreedyLSVI, NoBonus, UniformPolicy };

inline std::string to_string(AgentMode m) {
  switch (m) {
    case AgentMode::OPPO: return "OPPO";
    case AgentMode::GreedyLSVI: return "GreedyLSVI";
    case AgentMode::NoBonus: return "NoBonus";
    case AgentMode::UniformPolicy: return "UniformPolicy";
  }
  return "?";
}

inline AgentMode agent_mode_from_string(const std::string& s) {
  if (s == "OPPO") return AgentMode::OPPO;
  if (s == "GreedyLSVI") return AgentMode::GreedyLSVI;
  if (s == "NoBonus") return AgentMode::NoBonus;
  if (s == "UniformPolicy") return AgentMode::UniformPolicy;
  throw InvalidInput("unknown agent mode: " + s);
}

struct HyperParams {
  double alpha = 0.0;   // mirror-descent step size
  double beta = 0.0;    // bonus scale
  double lambda = 1.0;  // ridge regularizer
  double zeta = 0.05;
  double c_beta = 1.0;
  long long episodes = 1;  // K

  bool operator==(const HyperParams&) const = default;
};

struct AgentState {
  AgentMode mode = AgentMode::OPPO;
  HyperParams hyper;
  int episode = 1;          // index k of the next (or open) episode
  bool episode_open = false;
  Policy policy;            // pi^{k-1} between episodes, pi^k while open
  StepTables prev_q;        // Q^{k-1}
  std::vector<RidgeAccumulator> ridge;
  std::vector<HistoryBuffer> history;

  bool operator==(const AgentState& o) const {
    return mode == o.mode && hyper == o.hyper && episode == o.episode && episode_open == o.episode_open &&
           policy == o.policy && prev_q == o.prev_q && ridge == o.ridge && history == o.history;
  }
};

class Agent {
 public:
  Agent(FeatureMap features, int horizon, AgentMode mode, HyperParams hyper) : features_(std::move(features)) {
    if (horizon < 1) throw InvalidInput("horizon must be positive");
    if (!(hyper.alpha >= 0.0) || !std::isfinite(hyper.alpha)) throw InvalidInput("alpha must be finite, >= 0");
    if (!(hyper.beta >= 0.0) || !std::isfinite(hyper.beta)) throw InvalidInput("beta must be finite, >= 0");
    const int S = features_.num_states(), A = features_.num_actions();
    state_.mode = mode;
    state_.hyper = hyper;
    state_.policy = Policy::uniform(horizon, S, A);
    state_.prev_q.assign(horizon, StateActionTable::Zero(S, A));
    state_.ridge.assign(horizon, RidgeAccumulator(features_.dim(), hyper.lambda));
    state_.history.assign(horizon, HistoryBuffer{});
  }

  Agent(FeatureMap features, AgentState state) : features_(std::move(features)), state_(std::move(state)) {}

  /// Returns the policy to execute in the current episode.
  const Policy& begin_episode() {
    if (state_.episode_open) throw std::logic_error("begin_episode called twice without end_episode");
    switch (state_.mode) {
      case AgentMode::OPPO:
      case AgentMode::NoBonus:
        state_.policy = improve_policy(state_.policy, state_.prev_q, StepSize(state_.hyper.alpha));
        break;
      case AgentMode::GreedyLSVI:
        state_.policy = greedy_policy(state_.prev_q);
        break;
      case AgentMode::UniformPolicy:
        state_.policy = Policy::uniform(horizon(), features_.num_states(), features_.num_actions());
        break;
    }
    state_.episode_open = true;
    return state_.policy;
  }

  /// Consumes the finished trajectory and the revealed reward. Returns the
  /// evaluation pass (absent for UniformPolicy, which keeps Q = 0).
  std::optional<Evaluation> end_episode(const Trajectory& traj, const RewardFunction& reward) {
    if (!state_.episode_open) throw std::logic_error("end_episode called without begin_episode");
    if (traj.episode != state_.episode)
      throw InvalidInput("trajectory episode " + std::to_string(traj.episode) + " does not match agent episode " +
                         std::to_string(state_.episode));
    if (traj.horizon() != horizon() || reward.horizon() != horizon())
      throw InvalidInput("trajectory or reward horizon mismatch");
    std::optional<Evaluation> eval;
    if (state_.mode != AgentMode::UniformPolicy) {
      const BonusParams params{state_.mode == AgentMode::NoBonus ? 0.0 : state_.hyper.beta};
      eval = evaluate_policy(state_.ridge, state_.policy, reward, features_, params);
      record_episode(state_.ridge, state_.history, *eval, traj, features_.num_actions());
      state_.prev_q = eval->values.q;
    }
    state_.episode_open = false;
    ++state_.episode;
    return eval;
  }

  int horizon() const { return static_cast<int>(state_.prev_q.size()); }
  const AgentState& state() const { return state_; }
  const FeatureMap& features() const { return features_; }

 private:
  FeatureMap features_;
  AgentState state_;
};

}  // namespace oppo
