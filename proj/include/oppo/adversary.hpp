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

// Reward adversaries. The reward for episode k is committed at the start of
// the episode from the episodes 1..k-1 recorded in a History.

#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "oppo/common.hpp"
#include "oppo/mdp_core.hpp"

namespace oppo {

enum class AdversaryType { Fixed, PeriodicSwitch, AdaptiveAvoid };

struct AdversaryKind {
  AdversaryType type = AdversaryType::Fixed;
  int period = 1;
  double strength = 0.0;

  static AdversaryKind fixed() { return {}; }
  static AdversaryKind periodic(int period) { return {AdversaryType::PeriodicSwitch, period, 0.0}; }
  static AdversaryKind adaptive_avoid(double strength) { return {AdversaryType::AdaptiveAvoid, 1, strength}; }
};

inline std::string to_string(AdversaryType t) {
  switch (t) {
    case AdversaryType::Fixed: return "Fixed";
    case AdversaryType::PeriodicSwitch: return "PeriodicSwitch";
    case AdversaryType::AdaptiveAvoid: return "AdaptiveAvoid";
  }
  return "?";
}

inline AdversaryType adversary_type_from_string(const std::string& s) {
  if (s == "Fixed") return AdversaryType::Fixed;
  if (s == "PeriodicSwitch") return AdversaryType::PeriodicSwitch;
  if (s == "AdaptiveAvoid") return AdversaryType::AdaptiveAvoid;
  throw InvalidInput("unknown adversary kind: " + s);
}

/// Episodes 1..k-1 as (trajectory, reward) pairs.
class History {
 public:
  void append(Trajectory traj, RewardFunction reward) {
    if (traj.episode != next_episode())
      throw InvalidInput("history episodes must be contiguous from 1; got " + std::to_string(traj.episode));
    trajectories_.push_back(std::move(traj));
    rewards_.push_back(std::move(reward));
  }
  int next_episode() const { return static_cast<int>(trajectories_.size()) + 1; }
  std::size_t size() const { return trajectories_.size(); }
  bool empty() const { return trajectories_.empty(); }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  const std::vector<RewardFunction>& rewards() const { return rewards_; }

 private:
  std::vector<Trajectory> trajectories_;
  std::vector<RewardFunction> rewards_;
};

/// Flags every entry outside [0, 1] (and non-finite entries).
inline ValidationReport validate_reward(const RewardFunction& r) {
  ValidationReport report;
  for (int h = 0; h < r.horizon(); ++h) {
    const auto& t = r.r[static_cast<std::size_t>(h)];
    for (Eigen::Index x = 0; x < t.rows(); ++x)
      for (Eigen::Index a = 0; a < t.cols(); ++a) {
        const double v = t(x, a);
        if (!(v >= 0.0 && v <= 1.0))
          report.violations.push_back(
              {"reward_range", h, static_cast<int>(x), static_cast<int>(a), v < 0.0 ? -v : v - 1.0});
      }
  }
  return report;
}

/// Empirical state-action visit frequency of one trajectory: the fraction of
/// its H steps spent at (x, a).
inline StateActionTable visit_frequency(const Trajectory& traj, int num_states, int num_actions) {
  StateActionTable f = StateActionTable::Zero(num_states, num_actions);
  const int H = traj.horizon();
  for (int h = 0; h < H; ++h) f(traj.states[static_cast<std::size_t>(h)], traj.actions[static_cast<std::size_t>(h)]) += 1.0;
  if (H > 0) f /= static_cast<double>(H);
  return f;
}

/// Reward function for episode history.next_episode().
///   Fixed:          base[0]
///   PeriodicSwitch: base[floor((k-1)/period) mod n]
///   AdaptiveAvoid:  clip(base[0] - strength * f_{k-1}, 0, 1) at every step
inline RewardFunction next_reward(const AdversaryKind& kind, const History& history,
                                  std::span<const RewardFunction> base_rewards, Rng& /*rng*/) {
  if (base_rewards.empty()) throw InvalidInput("adversary needs at least one base reward");
  for (const auto& b : base_rewards)
    if (!validate_reward(b).ok()) throw InvalidInput("base reward has entries outside [0, 1]");
  const long long k = history.next_episode();
  switch (kind.type) {
    case AdversaryType::Fixed:
      return base_rewards[0];
    case AdversaryType::PeriodicSwitch: {
      if (kind.period < 1) throw InvalidInput("switch period must be >= 1");
      const auto n = static_cast<long long>(base_rewards.size());
      return base_rewards[static_cast<std::size_t>(((k - 1) / kind.period) % n)];
    }
    case AdversaryType::AdaptiveAvoid: {
      if (!(kind.strength >= 0.0 && kind.strength <= 1.0)) throw InvalidInput("strength must lie in [0, 1]");
      RewardFunction out = base_rewards[0];
      if (history.empty()) return out;
      const auto& first = out.r.front();
      const StateActionTable f =
          visit_frequency(history.trajectories().back(), static_cast<int>(first.rows()), static_cast<int>(first.cols()));
      for (auto& t : out.r) t = (t - kind.strength * f).cwiseMax(0.0).cwiseMin(1.0);
      return out;
    }
  }
  throw InvalidInput("unknown adversary kind");
}

}  // namespace oppo
