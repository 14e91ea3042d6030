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

#include "oppo/mdp_core.hpp"
#include "oppo/oracles.hpp"
#include "test_support.hpp"

namespace oppo {
namespace {

using testing::chain;
using testing::small_random_tabular;

TEST(TabularEmbedding, DimensionIsStatesSquaredTimesActions) {
  TabularMDP tab{1, 2, 2, {Matrix::Constant(4, 2, 0.5)}, 0};
  EXPECT_EQ(tabular_to_linear(tab).dim(), 8);
}

TEST(TabularEmbedding, IdentityTransitionsGiveZeroOneTheta) {
  const int S = 3, A = 2;
  TabularMDP tab{2, S, A, {}, 0};
  for (int h = 0; h < 2; ++h) {
    Matrix p = Matrix::Zero(S * A, S);
    for (int x = 0; x < S; ++x)
      for (int a = 0; a < A; ++a) p(x * A + a, x) = 1.0;
    tab.transitions.push_back(p);
  }
  const LinearMDP mdp = tabular_to_linear(tab);
  for (int h = 0; h < 2; ++h) {
    const Vector& t = mdp.theta(h);
    int ones = 0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      EXPECT_TRUE(t[i] == 0.0 || t[i] == 1.0);
      ones += t[i] == 1.0;
    }
    EXPECT_EQ(ones, S * A);
  }
}

TEST(TabularEmbedding, RoundTripsTransitionTables) {
  InstanceSpec spec{InstanceKind::TabularRandom, 3, 4, 3, 48, 11, 1.0, 1.0};
  const TabularMDP tab = random_tabular_tables(spec);
  const LinearMDP mdp = tabular_to_linear(tab);
  for (int h = 0; h < 3; ++h)
    for (int x = 0; x < 4; ++x)
      for (int a = 0; a < 3; ++a) {
        const Vector p = transition_distribution(mdp, h, x, a);
        for (int y = 0; y < 4; ++y) EXPECT_NEAR(p[y], tab.transitions[h](x * 3 + a, y), 1e-15);
      }
}

TEST(TabularEmbedding, RejectsNonStochasticRows) {
  TabularMDP tab{1, 2, 1, {Matrix::Constant(2, 2, 0.6)}, 0};
  EXPECT_THROW(tabular_to_linear(tab), InvalidInput);
  tab.transitions[0] << 1.2, -0.2, 0.5, 0.5;
  EXPECT_THROW(tabular_to_linear(tab), InvalidInput);
}

TEST(Validator, TabularEmbeddingIsValid) {
  EXPECT_TRUE(validate_linear_mdp(small_random_tabular(3, 4, 2, 5), 10, 1).ok());
}

TEST(Validator, DoubledThetaFlagsEveryRow) {
  const LinearMDP base = small_random_tabular(2, 3, 2, 9);
  std::vector<Vector> theta = base.theta();
  for (auto& t : theta) t *= 2.0;
  const LinearMDP bad(2, base.features(), theta, 0);
  const ValidationReport rep = validate_linear_mdp(bad, 4, 1);
  int row_sum = 0;
  for (const auto& v : rep.violations)
    if (v.kind == "row_sum") {
      ++row_sum;
      EXPECT_NEAR(v.magnitude, 1.0, 1e-12);
    }
  EXPECT_EQ(row_sum, 2 * 3 * 2);
}

TEST(Validator, FlagsNegativeEntriesAndLargeTheta) {
  // One state, two actions, explicit 1-d feature psi = 1: P = theta.
  Matrix psi = Matrix::Ones(1, 2);
  const FeatureMap f = FeatureMap::explicit_map(1, 2, psi);
  const LinearMDP bad(1, f, {Vector::Constant(1, 3.0)}, 0);
  const ValidationReport rep = validate_linear_mdp(bad, 2, 0);
  bool theta_norm = false, row_sum = false;
  for (const auto& v : rep.violations) {
    theta_norm |= v.kind == "theta_norm";
    row_sum |= v.kind == "row_sum";
  }
  EXPECT_TRUE(theta_norm);
  EXPECT_TRUE(row_sum);

  // Two states, psi(x, a, y) = e_y: theta = (1.5, -0.5) is a row with a negative entry.
  Matrix psi2(2, 2 * 1 * 2);
  psi2 << 1, 0, 1, 0,
          0, 1, 0, 1;
  const LinearMDP neg(1, FeatureMap::explicit_map(2, 1, psi2), {Vector((Vector(2) << 1.5, -0.5).finished())}, 0);
  bool negative = false;
  for (const auto& v : validate_linear_mdp(neg, 2, 0).violations) negative |= v.kind == "negative_probability";
  EXPECT_TRUE(negative);
  EXPECT_THROW(transition_distribution(neg, 0, 0, 0), InvalidInput);
}

TEST(TransitionDistribution, DeterministicChainIsOneHot) {
  const LinearMDP mdp = chain(3, 4, 2);
  const Vector p = transition_distribution(mdp, 1, 2, 1);
  EXPECT_EQ(p, (Vector(4) << 0, 0, 0, 1).finished());
}

TEST(TransitionDistribution, MixtureIsConvexCombination) {
  Matrix q1(2, 2), q2(2, 2);
  q1 << 0.9, 0.1, 0.2, 0.8;
  q2 << 0.5, 0.5, 0.0, 1.0;
  const FeatureMap f = FeatureMap::mixture(2, 1, {q1, q2});
  const LinearMDP mdp(1, f, {(Vector(2) << 0.3, 0.7).finished()}, 0);
  for (int x = 0; x < 2; ++x) {
    const Vector p = transition_distribution(mdp, 0, x, 0);
    for (int y = 0; y < 2; ++y) EXPECT_NEAR(p[y], 0.3 * q1(x, y) + 0.7 * q2(x, y), 1e-15);
  }
}

TEST(TransitionDistribution, ClampsTinyNegativesAndRejectsBadRows) {
  // Two states, one action, psi(x, a, y) = e_y, so P_h(.|x, a) = theta_h.
  Matrix psi = Matrix::Zero(2, 4);
  psi(0, 0) = psi(1, 1) = psi(0, 2) = psi(1, 3) = 1.0;
  const FeatureMap f = FeatureMap::explicit_map(2, 1, psi);
  const LinearMDP tiny(1, f, {(Vector(2) << 1.0 + 5e-13, -5e-13).finished()}, 0);
  const Vector p = transition_distribution(tiny, 0, 0, 0);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_DOUBLE_EQ(p.sum(), 1.0);
  const LinearMDP off(1, f, {(Vector(2) << 0.5, 0.5 + 2e-9).finished()}, 0);
  EXPECT_THROW(transition_distribution(off, 0, 0, 0), InvalidInput);
  EXPECT_THROW(transition_distribution(tiny, 1, 0, 0), InvalidInput);
}

TEST(FeatureExpectation, ZeroValueGivesZeroVector) {
  const LinearMDP mdp = small_random_tabular(2, 3, 2, 1);
  EXPECT_TRUE(feature_expectation(mdp, 1, 1, Vector::Zero(3)).isZero(0.0));
}

TEST(FeatureExpectation, IndicatorSelectsBasisSlice) {
  const LinearMDP mdp = small_random_tabular(2, 3, 2, 1);
  const int s = 2;
  Vector v = Vector::Zero(3);
  v[s] = 1.0;
  const Vector phi = feature_expectation(mdp, 1, 0, v);
  for (Eigen::Index i = 0; i < phi.size(); ++i)
    EXPECT_EQ(phi[i], i == mdp.features().column(1, 0, s) ? 1.0 : 0.0);
}

TEST(FeatureExpectation, ConstantOneIntegratesToOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LinearMDP mdp = make_instance({InstanceKind::LinearMixture, 2, 4, 3, 5, seed, 1.0, 1.0});
    for (int h = 0; h < 2; ++h)
      for (int x = 0; x < 4; ++x)
        for (int a = 0; a < 3; ++a)
          EXPECT_NEAR(feature_expectation(mdp, x, a, Vector::Ones(4)).dot(mdp.theta(h)), 1.0, 1e-12);
  }
}

TEST(FeatureExpectation, LinearInValue) {
  Rng rng = make_rng(3, {});
  std::normal_distribution<double> n;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LinearMDP mdp = seed % 2 ? small_random_tabular(2, 4, 3, seed)
                                   : make_instance({InstanceKind::LinearMixture, 2, 4, 3, 6, seed, 1.0, 1.0});
    Vector v1(4), v2(4);
    for (int i = 0; i < 4; ++i) {
      v1[i] = n(rng);
      v2[i] = n(rng);
    }
    const double a = n(rng), b = n(rng);
    for (int x = 0; x < 4; ++x)
      for (int u = 0; u < 3; ++u) {
        const Vector lhs = feature_expectation(mdp, x, u, a * v1 + b * v2);
        const Vector rhs = a * feature_expectation(mdp, x, u, v1) + b * feature_expectation(mdp, x, u, v2);
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
      }
  }
}

TEST(FeatureExpectation, InnerProductWithThetaIsTransitionExpectation) {
  Rng rng = make_rng(4, {});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LinearMDP mdp = seed % 2 ? small_random_tabular(3, 3, 2, seed)
                                   : make_instance({InstanceKind::LinearMixture, 3, 3, 2, 4, seed, 0.5, 1.0});
    Vector v(3);
    for (int i = 0; i < 3; ++i) v[i] = 3.0 * uniform01(rng);
    for (int h = 0; h < 3; ++h)
      for (int x = 0; x < 3; ++x)
        for (int a = 0; a < 2; ++a) {
          double pv = 0.0;
          const Vector p = transition_distribution(mdp, h, x, a);
          for (int y = 0; y < 3; ++y) pv += p[y] * v[y];
          EXPECT_NEAR(feature_expectation(mdp, x, a, v).dot(mdp.theta(h)), pv, 1e-10);
        }
  }
}

TEST(RunEpisode, DeterministicMdpAndPolicyGiveUniquePath) {
  const LinearMDP mdp = chain(3, 4, 2);
  const Policy pi = Policy::deterministic({{1, 1, 1, 1}, {0, 0, 0, 0}, {1, 0, 1, 0}}, 2);
  RewardFunction r = RewardFunction::constant(3, 4, 2, 0.25);
  r.r[2](2, 1) = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(seed, {});
    const Trajectory t = run_episode(mdp, pi, r, rng, 4);
    EXPECT_EQ(t.episode, 4);
    EXPECT_EQ(t.states, (std::vector<int>{0, 1, 2, 3}));
    EXPECT_EQ(t.actions, (std::vector<int>{1, 0, 1}));
    EXPECT_EQ(t.rewards, (std::vector<double>{0.25, 0.25, 1.0}));
  }
}

TEST(RunEpisode, SameSeedSameTrajectory) {
  const LinearMDP mdp = small_random_tabular(5, 4, 3, 8);
  const Policy pi = Policy::uniform(5, 4, 3);
  const RewardFunction r = random_reward(5, 4, 3, 1);
  Rng a = make_rng(77, {1}), b = make_rng(77, {1});
  EXPECT_EQ(run_episode(mdp, pi, r, a), run_episode(mdp, pi, r, b));
}

TEST(RunEpisode, RewardsMatchRewardFunction) {
  const LinearMDP mdp = small_random_tabular(4, 3, 3, 2);
  const RewardFunction r = random_reward(4, 3, 3, 5);
  Rng rng = make_rng(1, {});
  for (int i = 0; i < 50; ++i) {
    const Trajectory t = run_episode(mdp, Policy::uniform(4, 3, 3), r, rng);
    ASSERT_EQ(t.horizon(), 4);
    ASSERT_EQ(t.states.size(), 5u);
    for (int h = 0; h < 4; ++h) EXPECT_EQ(t.rewards[h], r(h, t.states[h], t.actions[h]));
  }
}

TEST(RunEpisode, VisitFrequenciesMatchExactOccupancy) {
  // Two-state symmetric chain: stay with 0.7, switch with 0.3, both actions.
  const int H = 4;
  TabularMDP tab{H, 2, 2, {}, 0};
  for (int h = 0; h < H; ++h) {
    Matrix p(4, 2);
    p << 0.7, 0.3, 0.7, 0.3, 0.3, 0.7, 0.3, 0.7;
    tab.transitions.push_back(p);
  }
  const LinearMDP mdp = tabular_to_linear(tab);
  const Policy pi = Policy::uniform(H, 2, 2);
  const auto occ = testing::reference_occupancy(mdp, pi);
  const auto lib = state_occupancy(ExactModel::from(mdp), pi);
  const int N = 10000;
  std::vector<std::vector<int>> counts(H + 1, std::vector<int>(2, 0));
  Rng rng = make_rng(2024, {});
  const RewardFunction r = RewardFunction::constant(H, 2, 2, 0.0);
  for (int i = 0; i < N; ++i) {
    const Trajectory t = run_episode(mdp, pi, r, rng);
    for (int h = 0; h <= H; ++h) ++counts[h][t.states[h]];
  }
  for (int h = 0; h < H; ++h)
    for (int x = 0; x < 2; ++x) {
      const double p = occ[h][x];
      EXPECT_NEAR(lib[h][x], p, 1e-15);
      const double sigma = std::sqrt(p * (1 - p) / N);
      EXPECT_LE(std::abs(counts[h][x] / double(N) - p), 3 * sigma + 1e-12) << "h=" << h << " x=" << x;
    }
}

TEST(RunEpisode, RejectsShapeMismatch) {
  const LinearMDP mdp = small_random_tabular(2, 3, 2, 1);
  Rng rng = make_rng(0, {});
  EXPECT_THROW(run_episode(mdp, Policy::uniform(2, 3, 3), RewardFunction::constant(2, 3, 2, 0), rng), InvalidInput);
  EXPECT_THROW(run_episode(mdp, Policy::uniform(2, 3, 2), RewardFunction::constant(3, 3, 2, 0), rng), InvalidInput);
}

TEST(LinearMdp, ConstructorRejectsBadShapes) {
  const FeatureMap f = FeatureMap::tabular(2, 2);
  EXPECT_THROW(LinearMDP(0, f, {}, 0), InvalidInput);
  EXPECT_THROW(LinearMDP(1, f, {Vector::Zero(3)}, 0), InvalidInput);
  EXPECT_THROW(LinearMDP(1, f, {Vector::Zero(8)}, 2), InvalidInput);
  EXPECT_THROW(FeatureMap::tabular(0, 1), InvalidInput);
}

}  // namespace
}  // namespace oppo
