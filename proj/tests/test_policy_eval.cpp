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
#include <random>

#include "oppo/agent.hpp"
#include "oppo/instances.hpp"
#include "oppo/lemmas.hpp"
#include "oppo/oracles.hpp"
#include "oppo/policy_eval.hpp"
#include "test_support.hpp"

namespace oppo {
namespace {

Vector unit(int d, int i) {
  Vector e = Vector::Zero(d);
  e[i] = 1.0;
  return e;
}

Vector gaussian(int d, Rng& rng) {
  std::normal_distribution<double> n;
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

TEST(Ridge, ZeroFeatureIsNoOp) {
  RidgeAccumulator acc(3, 1.0);
  acc.update(unit(3, 1), 2.0);
  const RidgeAccumulator before = acc;
  acc.update(Vector::Zero(3), 5.0);
  EXPECT_EQ(acc, before);
}

TEST(Ridge, SingleUnitUpdate) {
  const RidgeAccumulator acc = ridge_rank_one_update(RidgeAccumulator(3, 1.0), unit(3, 0), 1.0);
  Matrix expect = Matrix::Identity(3, 3);
  expect(0, 0) = 0.5;
  EXPECT_LE((acc.inverse() - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Ridge, MaintainedInverseMatchesFreshFactorization) {
  Rng rng = make_rng(1, {});
  RidgeAccumulator acc(6, 1.0);
  for (int i = 0; i < 100; ++i) acc.update(gaussian(6, rng), 1.0);
  const Matrix fresh = acc.gram().llt().solve(Matrix::Identity(6, 6));
  EXPECT_LE((acc.inverse() - fresh).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ridge, DriftStaysBoundedAcrossRefactorizations) {
  Rng rng = make_rng(2, {});
  RidgeAccumulator acc(5, 1.0);
  for (int i = 0; i < 3 * kRefactorInterval + 7; ++i) {
    acc.update(3.0 * gaussian(5, rng), 1.0);
    ASSERT_LE(acc.inverse_drift(), 1e-8) << "after update " << i;
  }
  EXPECT_EQ(acc.since_refactor(), 7);
  EXPECT_EQ(acc.updates(), 3 * kRefactorInterval + 7);
}

TEST(Ridge, RejectsBadConstructionAndInputs) {
  EXPECT_THROW(RidgeAccumulator(0, 1.0), InvalidInput);
  EXPECT_THROW(RidgeAccumulator(2, 0.0), InvalidInput);
  RidgeAccumulator acc(2, 1.0);
  EXPECT_THROW(acc.update(Vector::Ones(3), 1.0), InvalidInput);
  EXPECT_THROW(acc.update(Vector::Ones(2), std::nan("")), InvalidInput);
}

TEST(SolveWeights, EmptyHistoryGivesZero) { EXPECT_TRUE(solve_weights(RidgeAccumulator(4, 1.0)).isZero(0.0)); }

TEST(SolveWeights, SingleSampleClosedForm) {
  Rng rng = make_rng(3, {});
  const Vector phi = gaussian(4, rng);
  const double v = 1.7;
  const Vector w = solve_weights(ridge_rank_one_update(RidgeAccumulator(4, 1.0), phi, v));
  EXPECT_LE((w - phi * v / (1.0 + phi.squaredNorm())).cwiseAbs().maxCoeff(), 1e-14);
}

// Finite-difference gradient of M(w) + lambda |w|^2 vanishes at the solution.
TEST(SolveWeights, GradientVanishesAtSolution) {
  Rng rng = make_rng(4, {});
  const int d = 5;
  const double lambda = 0.7;
  std::vector<Vector> phis;
  std::vector<double> vs;
  RidgeAccumulator acc(d, lambda);
  for (int i = 0; i < 40; ++i) {
    phis.push_back(gaussian(d, rng));
    vs.push_back(3.0 * uniform01(rng));
    acc.update(phis.back(), vs.back());
  }
  auto objective = [&](const Vector& w) {
    double m = lambda * w.squaredNorm();
    for (std::size_t i = 0; i < phis.size(); ++i) m += std::pow(vs[i] - phis[i].dot(w), 2);
    return m;
  };
  const Vector w = solve_weights(acc);
  const double eps = 1e-6;
  Vector grad(d);
  for (int i = 0; i < d; ++i) {
    const Vector e = unit(d, i) * eps;
    grad[i] = (objective(w + e) - objective(w - e)) / (2 * eps);
  }
  EXPECT_LE(grad.norm(), 1e-6);
  // Random competitors never do better.
  for (int j = 0; j < 1000; ++j) EXPECT_GE(objective(w + 0.1 * gaussian(d, rng)) - objective(w), -1e-9);
}

TEST(Bonus, Examples) {
  RidgeAccumulator acc(3, 1.0);
  EXPECT_EQ(bonus(acc, Vector::Zero(3), 2.0), 0.0);
  const Vector phi = (Vector(3) << 1.0, -2.0, 0.5).finished();
  EXPECT_NEAR(bonus(acc, phi, 2.0), 2.0 * phi.norm(), 1e-15);
  acc.update(unit(3, 0), 1.0);
  EXPECT_NEAR(bonus(acc, unit(3, 0), 3.0), 3.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(bonus(acc, phi, -1.0), InvalidInput);
}

TEST(Bonus, NonIncreasingUnderUpdates) {
  Rng rng = make_rng(5, {});
  for (int run = 0; run < 20; ++run) {
    RidgeAccumulator acc(4, 1.0);
    const Vector probe = gaussian(4, rng);
    double last = bonus(acc, probe, 1.0);
    for (int i = 0; i < 300; ++i) {
      acc.update(i % 4 == 0 ? probe : gaussian(4, rng), 0.0);
      const double b = bonus(acc, probe, 1.0);
      EXPECT_LE(b, last + 1e-12);
      last = b;
    }
  }
}

TEST(BonusParams, TheoryFormula) {
  const BonusParams p = BonusParams::theory(1.0, 75, 4, 20000, 0.05);
  EXPECT_NEAR(p.beta, std::sqrt(75.0 * 16.0 * std::log(75.0 * 20000.0 / 0.05)), 1e-12);
  EXPECT_THROW(BonusParams::theory(1.0, 1, 1, 1, 0.0), InvalidInput);
  EXPECT_THROW(BonusParams::theory(0.0, 1, 1, 1, 0.5), InvalidInput);
}

std::vector<RidgeAccumulator> fresh(int H, int d, double lambda = 1.0) {
  return std::vector<RidgeAccumulator>(static_cast<std::size_t>(H), RidgeAccumulator(d, lambda));
}

TEST(EvaluatePolicy, FirstEpisodeClosedForm) {
  const LinearMDP mdp = testing::small_random_tabular(3, 3, 2, 4);
  const RewardFunction r = random_reward(3, 3, 2, 9);
  const Policy pi = Policy::uniform(3, 3, 2);
  const double beta = 0.4;
  const Evaluation e = evaluate_policy(fresh(3, mdp.dim()), pi, r, mdp.features(), {beta});
  for (int h = 2; h >= 0; --h) {
    EXPECT_TRUE(e.w[h].isZero(0.0));
    const Vector& v_next = e.values.v[h + 1];
    for (int x = 0; x < 3; ++x)
      for (int a = 0; a < 2; ++a) {
        const double norm = feature_expectation(mdp, x, a, v_next).norm();
        EXPECT_NEAR(e.values.q[h](x, a), std::clamp(r(h, x, a) + beta * norm, 0.0, 3.0 - h), 1e-14);
      }
  }
  EXPECT_TRUE(e.values.v[3].isZero(0.0));
}

TEST(EvaluatePolicy, HugeBonusHitsUpperClip) {
  const int H = 4;
  const LinearMDP mdp = testing::small_random_tabular(H, 3, 2, 5);
  const RewardFunction r = RewardFunction::constant(H, 3, 2, 1.0);
  const Evaluation e = evaluate_policy(fresh(H, mdp.dim()), Policy::uniform(H, 3, 2), r, mdp.features(), {1e6});
  for (int h = 0; h < H; ++h) {
    EXPECT_TRUE((e.values.q[h].array() == double(H - h)).all());
    EXPECT_TRUE((e.values.v[h].array() == double(H - h)).all());
  }
}

TEST(EvaluatePolicy, ValueIsPolicyAverageOfQ) {
  Rng rng = make_rng(6, {});
  const LinearMDP mdp = testing::small_random_tabular(3, 4, 3, 6);
  const Policy pi = random_policy(3, 4, 3, rng);
  const Evaluation e = evaluate_policy(fresh(3, mdp.dim()), pi, random_reward(3, 4, 3, 2), mdp.features(), {0.3});
  for (int h = 0; h < 3; ++h)
    for (int x = 0; x < 4; ++x) {
      double v = 0.0;
      for (int a = 0; a < 3; ++a) v += pi.prob(h, x, a) * e.values.q[h](x, a);
      EXPECT_NEAR(e.values.v[h][x], v, 1e-12);
    }
}

// With beta = 0 and a full-rank tabular history of exact targets, phi^T w is
// the ridge projection of P V; as lambda shrinks it converges to P V.
TEST(EvaluatePolicy, ShrinkingLambdaRecoversTransitionExpectation) {
  const int H = 2, S = 2, A = 2;
  const LinearMDP mdp = testing::small_random_tabular(H, S, A, 7);
  const ExactModel model = ExactModel::from(mdp);
  const FeatureMap& f = mdp.features();
  Vector v_next(S);
  v_next << 0.3, 1.4;
  double last_err = 1e300;
  for (double lambda : {1.0, 1e-2, 1e-4, 1e-6}) {
    RidgeAccumulator acc(f.dim(), lambda);
    // Replay every (x, a, x') with target v_next(x') weighted by P(x'|x,a)
    // through repeated samples: features are phi = sum psi V, targets V(x').
    const Matrix phi = feature_expectation_table(f, v_next);
    for (int x = 0; x < S; ++x)
      for (int a = 0; a < A; ++a)
        for (int y = 0; y < S; ++y) {
          const double p = model.p.step(1)(x * A + a, y);
          // Weighted least squares via sqrt(p)-scaled rows.
          acc.update(std::sqrt(p) * phi.col(x * A + a), std::sqrt(p) * v_next[y]);
        }
    const Vector w = acc.weights();
    const StateActionTable pv = model.apply(1, v_next);
    double err = 0.0;
    for (int x = 0; x < S; ++x)
      for (int a = 0; a < A; ++a) err = std::max(err, std::abs(phi.col(x * A + a).dot(w) - pv(x, a)));
    EXPECT_LE(err, last_err + 1e-12);
    last_err = err;
  }
  EXPECT_LE(last_err, 1e-5);
}

TEST(EvaluatePolicy, RejectsMismatchedInputs) {
  const LinearMDP mdp = testing::small_random_tabular(2, 2, 2, 1);
  const RewardFunction r = RewardFunction::constant(2, 2, 2, 0.5);
  EXPECT_THROW(evaluate_policy(fresh(3, mdp.dim()), Policy::uniform(2, 2, 2), r, mdp, {1.0}), InvalidInput);
  EXPECT_THROW(evaluate_policy(fresh(2, mdp.dim()), Policy::uniform(2, 2, 2), r, mdp.features(), {-1.0}), InvalidInput);
}

// Runs an OPPO agent and checks the evaluation identities at every episode.
TEST(EvaluatePolicyProperty, UnclippedErrorIdentityAndClipBounds) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const LinearMDP mdp = seed % 2 ? testing::small_random_tabular(3, 4, 2, seed)
                                   : make_instance({InstanceKind::LinearMixture, 3, 4, 2, 3, seed, 1.0, 1.0});
    const ExactModel model = ExactModel::from(mdp);
    const int H = 3;
    HyperParams hp;
    hp.alpha = 0.5;
    hp.beta = 0.8;
    hp.lambda = 1.0;
    Agent agent(mdp.features(), H, AgentMode::OPPO, hp);
    for (int k = 1; k <= 40; ++k) {
      const RewardFunction r = random_reward(H, 4, 2, seed * 100 + k);
      const Policy& pi = agent.begin_episode();
      Rng rng = make_rng(seed, {static_cast<std::uint64_t>(k)});
      const Trajectory t = run_episode(mdp, pi, r, rng, k);
      const auto history = agent.state().history;
      const Evaluation e = *agent.end_episode(t, r);
      for (int h = 0; h < H; ++h) {
        const Vector& v = e.values.v[h + 1];
        const StateActionTable pv = model.apply(h, v);
        const StateActionTable phat = implicit_transition_apply(history[h], v, hp.lambda, mdp.features());
        const StateActionTable lhs = r.r[h] + pv - e.q_bar[h];
        const StateActionTable rhs = (pv - phat) - e.gamma[h];
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LE((e.q_bar[h] - r.r[h] - e.gamma[h] - phat).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_GE(e.values.q[h].minCoeff(), 0.0);
        EXPECT_LE(e.values.q[h].maxCoeff(), double(H - h));
        EXPECT_GE(e.values.v[h].minCoeff(), 0.0);
        EXPECT_LE(e.values.v[h].maxCoeff(), double(H - h) * (1.0 + 1e-12));  // rows of pi sum to 1 up to rounding
      }
    }
  }
}

TEST(RecordEpisode, AppendsFeaturesAndTargets) {
  const LinearMDP mdp = testing::small_random_tabular(2, 3, 2, 2);
  auto acc = fresh(2, mdp.dim());
  std::vector<HistoryBuffer> hist(2);
  const Policy pi = Policy::uniform(2, 3, 2);
  const RewardFunction r = random_reward(2, 3, 2, 3);
  const Evaluation e = evaluate_policy(acc, pi, r, mdp.features(), {0.5});
  Rng rng = make_rng(9, {});
  const Trajectory t = run_episode(mdp, pi, r, rng);
  record_episode(acc, hist, e, t, 2);
  for (int h = 0; h < 2; ++h) {
    ASSERT_EQ(hist[h].size(), 1u);
    EXPECT_EQ(hist[h].features[0], e.phi[h].col(t.states[h] * 2 + t.actions[h]));
    EXPECT_EQ(hist[h].targets[0], e.values.v[h + 1][t.states[h + 1]]);
  }
  EXPECT_TRUE(hist[1].features[0].isZero(0.0));  // V_H = 0
}

}  // namespace
}  // namespace oppo
