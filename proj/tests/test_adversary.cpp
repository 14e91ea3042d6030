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
#include <vector>

#include "oppo/adversary.hpp"
#include "oppo/instances.hpp"

namespace oppo {
namespace {

constexpr int H = 3, S = 4, A = 2;

Trajectory fake_trajectory(int k, std::uint64_t seed) {
  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(k)});
  Trajectory t;
  t.episode = k;
  for (int h = 0; h < H; ++h) {
    t.states.push_back(static_cast<int>(rng() % S));
    t.actions.push_back(static_cast<int>(rng() % A));
    t.rewards.push_back(0.0);
  }
  t.states.push_back(0);
  return t;
}

History history_of(int n, std::uint64_t seed) {
  History hist;
  for (int k = 1; k <= n; ++k) hist.append(fake_trajectory(k, seed), random_reward(H, S, A, seed + k));
  return hist;
}

TEST(Adversary, FixedAlwaysReturnsFirstBase) {
  const std::vector<RewardFunction> bases{random_reward(H, S, A, 1), random_reward(H, S, A, 2)};
  Rng rng = make_rng(0, {});
  for (int n : {0, 1, 7}) EXPECT_EQ(next_reward(AdversaryKind::fixed(), history_of(n, 3), bases, rng), bases[0]);
}

TEST(Adversary, PeriodicSwitchSchedule) {
  const std::vector<RewardFunction> bases{RewardFunction::constant(H, S, A, 0.0), RewardFunction::constant(H, S, A, 1.0)};
  Rng rng = make_rng(0, {});
  History hist;
  for (int k = 1; k <= 6; ++k) {
    EXPECT_EQ(next_reward(AdversaryKind::periodic(1), hist, bases, rng), bases[static_cast<std::size_t>((k - 1) % 2)]);
    EXPECT_EQ(next_reward(AdversaryKind::periodic(2), hist, bases, rng),
              bases[static_cast<std::size_t>(((k - 1) / 2) % 2)]);
    hist.append(fake_trajectory(k, 4), bases[0]);
  }
  EXPECT_THROW(next_reward(AdversaryKind::periodic(0), hist, bases, rng), InvalidInput);
}

TEST(Adversary, AdaptiveAvoidZeroesSingleVisitWhenStrengthOne) {
  // With H = 1 every visited pair has frequency 1.
  const RewardFunction base = RewardFunction::constant(1, S, A, 0.8);
  History hist;
  Trajectory t;
  t.episode = 1;
  t.states = {2, 0};
  t.actions = {1};
  t.rewards = {0.8};
  hist.append(t, base);
  Rng rng = make_rng(0, {});
  const std::vector<RewardFunction> bases{base};
  const RewardFunction r = next_reward(AdversaryKind::adaptive_avoid(1.0), hist, bases, rng);
  for (int x = 0; x < S; ++x)
    for (int a = 0; a < A; ++a) EXPECT_EQ(r(0, x, a), (x == 2 && a == 1) ? 0.0 : 0.8);
  const RewardFunction half = next_reward(AdversaryKind::adaptive_avoid(0.5), hist, bases, rng);
  EXPECT_DOUBLE_EQ(half(0, 2, 1), 0.3);
}

TEST(Adversary, AdaptiveAvoidUsesStepAveragedFrequency) {
  const RewardFunction base = RewardFunction::constant(H, S, A, 1.0);
  const History hist = history_of(1, 11);
  const StateActionTable f = visit_frequency(hist.trajectories().back(), S, A);
  EXPECT_NEAR(f.sum(), 1.0, 1e-15);
  Rng rng = make_rng(0, {});
  const std::vector<RewardFunction> bases{base};
  const RewardFunction r = next_reward(AdversaryKind::adaptive_avoid(0.9), hist, bases, rng);
  for (int h = 0; h < H; ++h) EXPECT_LE((r.r[h] - (base.r[h] - 0.9 * f)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(validate_reward(r).ok());
  EXPECT_EQ(next_reward(AdversaryKind::adaptive_avoid(0.9), History{}, bases, rng), base);
  EXPECT_THROW(next_reward(AdversaryKind::adaptive_avoid(1.5), hist, bases, rng), InvalidInput);
}

TEST(Adversary, ObliviousKindsIgnoreTrajectoryContents) {
  const std::vector<RewardFunction> bases{random_reward(H, S, A, 5), random_reward(H, S, A, 6),
                                          random_reward(H, S, A, 7)};
  Rng rng = make_rng(0, {});
  for (int n = 0; n < 12; ++n) {
    const History a = history_of(n, 100), b = history_of(n, 200);
    for (const auto& kind : {AdversaryKind::fixed(), AdversaryKind::periodic(1), AdversaryKind::periodic(4)})
      EXPECT_EQ(next_reward(kind, a, bases, rng), next_reward(kind, b, bases, rng));
  }
}

TEST(Adversary, RejectsInvalidBases) {
  Rng rng = make_rng(0, {});
  EXPECT_THROW(next_reward(AdversaryKind::fixed(), History{}, std::vector<RewardFunction>{}, rng), InvalidInput);
  RewardFunction bad = RewardFunction::constant(H, S, A, 0.5);
  bad.r[1](0, 0) = 1.0 + 1e-9;
  EXPECT_THROW(next_reward(AdversaryKind::fixed(), History{}, std::vector<RewardFunction>{bad}, rng), InvalidInput);
}

TEST(ValidateReward, FlagsOutOfRangeEntries) {
  RewardFunction r = RewardFunction::constant(2, 2, 2, 1.0);
  EXPECT_TRUE(validate_reward(r).ok());
  r.r[0](1, 0) = 1.0 + 1e-15;
  r.r[1](0, 1) = -0.25;
  r.r[1](1, 1) = std::nan("");
  const ValidationReport rep = validate_reward(r);
  ASSERT_EQ(rep.violations.size(), 3u);
  EXPECT_EQ(rep.violations[0].h, 0);
  EXPECT_EQ(rep.violations[0].x, 1);
  EXPECT_DOUBLE_EQ(rep.violations[1].magnitude, 0.25);
}

TEST(History, RequiresContiguousEpisodes) {
  History hist;
  EXPECT_EQ(hist.next_episode(), 1);
  EXPECT_THROW(hist.append(fake_trajectory(2, 1), random_reward(H, S, A, 1)), InvalidInput);
  hist.append(fake_trajectory(1, 1), random_reward(H, S, A, 1));
  EXPECT_EQ(hist.next_episode(), 2);
  EXPECT_THROW(hist.append(fake_trajectory(1, 1), random_reward(H, S, A, 1)), InvalidInput);
}

TEST(AdversaryType, StringRoundTrip) {
  for (auto t : {AdversaryType::Fixed, AdversaryType::PeriodicSwitch, AdversaryType::AdaptiveAvoid})
    EXPECT_EQ(adversary_type_from_string(to_string(t)), t);
  EXPECT_THROW(adversary_type_from_string("fixed"), InvalidInput);
}

}  // namespace
}  // namespace oppo
