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

// Benchmark instance generators. Every generator is a pure function of its
// spec (including the seed).

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oppo/common.hpp"
#include "oppo/mdp_core.hpp"

namespace oppo {

enum class InstanceKind { TabularRandom, CombinationLock, LinearMixture };

inline std::string to_string(InstanceKind k) {
  switch (k) {
    case InstanceKind::TabularRandom: return "tabular-random";
    case InstanceKind::CombinationLock: return "combination-lock";
    case InstanceKind::LinearMixture: return "linear-mixture";
  }
  return "?";
}

inline InstanceKind instance_kind_from_string(const std::string& s) {
  if (s == "tabular-random") return InstanceKind::TabularRandom;
  if (s == "combination-lock") return InstanceKind::CombinationLock;
  if (s == "linear-mixture") return InstanceKind::LinearMixture;
  throw InvalidInput("unknown instance kind: " + s);
}

struct InstanceSpec {
  InstanceKind kind = InstanceKind::TabularRandom;
  int horizon = 1;
  int num_states = 1;
  int num_actions = 1;
  int dim = 0;  // feature dimension; derived for tabular kinds
  std::uint64_t seed = 0;
  double concentration = 1.0;  // symmetric Dirichlet parameter for random rows
  double reward_value = 1.0;   // combination-lock payoff

  bool operator==(const InstanceSpec&) const = default;
};

/// Symmetric Dirichlet(concentration) sample of length n.
inline Vector sample_dirichlet(int n, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Vector v(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    v[i] = gamma(rng);
    total += v[i];
  }
  if (!(total > 0.0)) {
    v.setConstant(1.0 / n);
    return v;
  }
  return v / total;
}

/// (S*A) x S row-stochastic kernel with Dirichlet rows.
inline Matrix random_kernel(int num_states, int num_actions, double concentration, Rng& rng) {
  Matrix k(static_cast<Eigen::Index>(num_states) * num_actions, num_states);
  for (Eigen::Index row = 0; row < k.rows(); ++row) k.row(row) = sample_dirichlet(num_states, concentration, rng).transpose();
  return k;
}

inline TabularMDP random_tabular_tables(const InstanceSpec& spec) {
  if (spec.horizon < 1 || spec.num_states < 1 || spec.num_actions < 1) throw InvalidInput("sizes must be positive");
  if (!(spec.concentration > 0.0)) throw InvalidInput("Dirichlet concentration must be positive");
  Rng rng = make_rng(spec.seed, {0x746162ULL});
  TabularMDP tab{spec.horizon, spec.num_states, spec.num_actions, {}, 0};
  for (int h = 0; h < spec.horizon; ++h)
    tab.transitions.push_back(random_kernel(spec.num_states, spec.num_actions, spec.concentration, rng));
  return tab;
}

/// Tabular MDP with Dirichlet transition rows, embedded with d = S^2 A.
inline LinearMDP random_tabular(const InstanceSpec& spec) { return tabular_to_linear(random_tabular_tables(spec)); }

struct CombinationLock {
  LinearMDP mdp;
  RewardFunction reward;
  std::vector<int> combination;  // correct action at each step
};

/// States s_0..s_H followed by an absorbing trap (index H + 1). At step h the
/// agent on the chain sits at s_h; the correct action moves it to s_{h+1},
/// every other action to the trap. Only the correct action at the last step
/// pays reward_value.
inline CombinationLock combination_lock(int horizon, int num_actions, double reward_value, std::uint64_t seed) {
  if (horizon < 2) throw InvalidInput("combination lock needs H >= 2");
  if (num_actions < 2) throw InvalidInput("combination lock needs at least two actions");
  if (!(reward_value >= 0.0 && reward_value <= 1.0)) throw InvalidInput("lock reward must lie in [0, 1]");
  const int S = horizon + 2, A = num_actions, trap = horizon + 1;
  Rng rng = make_rng(seed, {0x6c6f636bULL});
  std::vector<int> combination(static_cast<std::size_t>(horizon));
  for (auto& c : combination) c = static_cast<int>(rng() % static_cast<std::uint64_t>(A));

  TabularMDP tab{horizon, S, A, {}, 0};
  for (int h = 0; h < horizon; ++h) {
    Matrix p = Matrix::Zero(static_cast<Eigen::Index>(S) * A, S);
    for (int x = 0; x < S; ++x)
      for (int a = 0; a < A; ++a) {
        const bool advance = (x == h) && (a == combination[static_cast<std::size_t>(h)]);
        p(x * A + a, advance ? h + 1 : trap) = 1.0;
      }
    tab.transitions.push_back(std::move(p));
  }
  RewardFunction reward = RewardFunction::constant(horizon, S, A, 0.0);
  reward.r.back()(horizon - 1, combination.back()) = reward_value;
  return {tabular_to_linear(tab), std::move(reward), std::move(combination)};
}

inline CombinationLock combination_lock(const InstanceSpec& spec) {
  return combination_lock(spec.horizon, spec.num_actions, spec.reward_value, spec.seed);
}

/// Mixture of d Dirichlet base kernels: psi(x,a,x') = (q_1(x'|x,a), ...,
/// q_d(x'|x,a)) and theta_h a point on the simplex, so ||theta_h||_2 <= 1 and
/// ||sum psi V||_2 <= sqrt(d) H hold by construction.
inline LinearMDP random_linear(const InstanceSpec& spec) {
  if (spec.horizon < 1 || spec.num_states < 1 || spec.num_actions < 1 || spec.dim < 1)
    throw InvalidInput("sizes must be positive");
  if (!(spec.concentration > 0.0)) throw InvalidInput("Dirichlet concentration must be positive");
  Rng rng = make_rng(spec.seed, {0x6c696eULL});
  std::vector<Matrix> kernels;
  for (int j = 0; j < spec.dim; ++j)
    kernels.push_back(random_kernel(spec.num_states, spec.num_actions, spec.concentration, rng));
  std::vector<Vector> theta;
  for (int h = 0; h < spec.horizon; ++h) theta.push_back(sample_dirichlet(spec.dim, 1.0, rng));
  return LinearMDP(spec.horizon, FeatureMap::mixture(spec.num_states, spec.num_actions, std::move(kernels)),
                   std::move(theta), 0);
}

/// Builds the instance described by spec.
inline LinearMDP make_instance(const InstanceSpec& spec) {
  switch (spec.kind) {
    case InstanceKind::TabularRandom: return random_tabular(spec);
    case InstanceKind::CombinationLock: return combination_lock(spec).mdp;
    case InstanceKind::LinearMixture: return random_linear(spec);
  }
  throw InvalidInput("unknown instance kind");
}

/// Reward tables with i.i.d. uniform [0, 1) entries.
inline RewardFunction random_reward(int horizon, int num_states, int num_actions, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x726577ULL});
  RewardFunction r = RewardFunction::constant(horizon, num_states, num_actions, 0.0);
  for (auto& t : r.r)
    for (Eigen::Index x = 0; x < t.rows(); ++x)
      for (Eigen::Index a = 0; a < t.cols(); ++a) t(x, a) = uniform01(rng);
  return r;
}

}  // namespace oppo
