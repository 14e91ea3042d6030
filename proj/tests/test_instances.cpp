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

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "oppo/instances.hpp"
#include "oppo/oracles.hpp"

namespace oppo {
namespace {

InstanceSpec tabular_spec(int H, int S, int A, std::uint64_t seed, double conc = 1.0) {
  InstanceSpec s;
  s.kind = InstanceKind::TabularRandom;
  s.horizon = H;
  s.num_states = S;
  s.num_actions = A;
  s.dim = S * S * A;
  s.seed = seed;
  s.concentration = conc;
  return s;
}

TEST(RandomTabular, SameSeedSameInstance) {
  const LinearMDP a = random_tabular(tabular_spec(3, 4, 2, 42)), b = random_tabular(tabular_spec(3, 4, 2, 42));
  const LinearMDP c = random_tabular(tabular_spec(3, 4, 2, 43));
  EXPECT_EQ(a.theta(), b.theta());
  EXPECT_NE(a.theta(), c.theta());
  EXPECT_EQ(a.dim(), 32);
}

TEST(RandomTabular, LargeConcentrationGivesNearUniformRows) {
  const TabularMDP tab = random_tabular_tables(tabular_spec(1, 5, 20, 3, 1e6));
  const Matrix& p = tab.transitions[0];
  ASSERT_EQ(p.rows(), 100);
  EXPECT_LE((p.array() - 0.2).abs().maxCoeff(), 0.01);
}

TEST(RandomTabular, ValidatorCleanAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const LinearMDP mdp = random_tabular(tabular_spec(3, 1 + static_cast<int>(seed % 5), 1 + static_cast<int>(seed % 3),
                                                      seed, 0.1 + static_cast<double>(seed % 4)));
    EXPECT_TRUE(validate_linear_mdp(mdp, 5, seed).ok()) << "seed " << seed;
  }
}

TEST(RandomTabular, RejectsBadSpecs) {
  EXPECT_THROW(random_tabular(tabular_spec(0, 2, 2, 1)), InvalidInput);
  EXPECT_THROW(random_tabular(tabular_spec(2, 2, 2, 1, 0.0)), InvalidInput);
}

TEST(SampleDirichlet, OnSimplex) {
  Rng rng = make_rng(5, {});
  for (double c : {0.01, 0.5, 1.0, 100.0}) {
    const Vector v = sample_dirichlet(7, c, rng);
    EXPECT_NEAR(v.sum(), 1.0, 1e-14);
    EXPECT_GE(v.minCoeff(), 0.0);
  }
}

TEST(CombinationLock, StructureAndValues) {
  for (int H : {2, 3, 4, 6}) {
    const CombinationLock lock = combination_lock(H, 2, 1.0, 7);
    EXPECT_EQ(lock.mdp.num_states(), H + 2);
    EXPECT_EQ(static_cast<int>(lock.combination.size()), H);
    const ExactModel m = ExactModel::from(lock.mdp);
    const Policy star = hindsight_optimal_policy(m, std::vector<RewardFunction>{lock.reward});
    EXPECT_NEAR(exact_policy_value(m, star, lock.reward).v[0][0], 1.0, 1e-15);
    EXPECT_NEAR(exact_policy_value(m, Policy::uniform(H, H + 2, 2), lock.reward).v[0][0], std::pow(2.0, -H), 1e-15);
    EXPECT_TRUE(validate_linear_mdp(lock.mdp, 3, 1).ok());
  }
}

TEST(CombinationLock, FollowingTheCombinationReachesTheEnd) {
  const CombinationLock lock = combination_lock(5, 3, 0.7, 11);
  std::vector<std::vector<int>> actions(5, std::vector<int>(7, 0));
  for (int h = 0; h < 5; ++h) actions[h][h] = lock.combination[h];
  const Policy pi = Policy::deterministic(actions, 3);
  Rng rng = make_rng(0, {});
  const Trajectory t = run_episode(lock.mdp, pi, lock.reward, rng, 1);
  for (int h = 0; h <= 5; ++h) EXPECT_EQ(t.states[h], h);
  EXPECT_DOUBLE_EQ(t.rewards.back(), 0.7);
}

TEST(CombinationLock, RejectsBadParameters) {
  EXPECT_THROW(combination_lock(1, 2, 1.0, 0), InvalidInput);
  EXPECT_THROW(combination_lock(3, 1, 1.0, 0), InvalidInput);
  EXPECT_THROW(combination_lock(3, 2, 1.5, 0), InvalidInput);
}

TEST(CombinationLock, SeedsVaryTheCombination) {
  std::set<std::vector<int>> seen;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) seen.insert(combination_lock(6, 2, 1.0, seed).combination);
  EXPECT_GT(seen.size(), 1u);
}

TEST(RandomLinear, ScalarDimensionIsOneKernel) {
  InstanceSpec s;
  s.kind = InstanceKind::LinearMixture;
  s.horizon = 3;
  s.num_states = 4;
  s.num_actions = 2;
  s.dim = 1;
  s.seed = 2;
  const LinearMDP mdp = random_linear(s);
  for (const auto& t : mdp.theta()) EXPECT_NEAR(t[0], 1.0, 1e-15);
  const TransitionTables p = transition_tables(mdp);
  EXPECT_LE((p.step(0) - mdp.features().kernels()[0]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RandomLinear, ValidatorCleanAcrossDimensions) {
  for (int d : {2, 4, 8})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      InstanceSpec s;
      s.kind = InstanceKind::LinearMixture;
      s.horizon = 3;
      s.num_states = 5;
      s.num_actions = 3;
      s.dim = d;
      s.seed = seed;
      const LinearMDP mdp = random_linear(s);
      EXPECT_EQ(mdp.dim(), d);
      for (const auto& t : mdp.theta()) EXPECT_LE(t.norm(), 1.0 + 1e-12);
      EXPECT_TRUE(validate_linear_mdp(mdp, 5, seed).ok()) << "d=" << d << " seed=" << seed;
    }
}

TEST(MakeInstance, DispatchesOnKind) {
  InstanceSpec s = tabular_spec(2, 3, 2, 1);
  EXPECT_EQ(make_instance(s).features().kind(), FeatureKind::Tabular);
  s.kind = InstanceKind::LinearMixture;
  s.dim = 3;
  EXPECT_EQ(make_instance(s).features().kind(), FeatureKind::Mixture);
  s.kind = InstanceKind::CombinationLock;
  EXPECT_EQ(make_instance(s).num_states(), 4);
  for (auto k : {InstanceKind::TabularRandom, InstanceKind::CombinationLock, InstanceKind::LinearMixture})
    EXPECT_EQ(instance_kind_from_string(to_string(k)), k);
}

TEST(RandomReward, DeterministicAndInRange) {
  const RewardFunction a = random_reward(3, 4, 2, 8), b = random_reward(3, 4, 2, 8);
  EXPECT_EQ(a, b);
  for (const auto& t : a.r) {
    EXPECT_GE(t.minCoeff(), 0.0);
    EXPECT_LT(t.maxCoeff(), 1.0);
  }
}

}  // namespace
}  // namespace oppo
