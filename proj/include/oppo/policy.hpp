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

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "oppo/common.hpp"

namespace oppo {

/// Logit assigned to excluded actions of a deterministic policy. exp() of it
/// underflows to exactly 0 while the logit itself stays finite.
inline constexpr double kExcludedLogit = -1.0e4;

/// Writes softmax(logits.row(x)) into probs.row(x) for every row, subtracting
/// the row max first.
inline void softmax_rows(const StateActionTable& logits, StateActionTable& probs) {
  probs.resize(logits.rows(), logits.cols());
  for (Eigen::Index x = 0; x < logits.rows(); ++x) {
    const double m = logits.row(x).maxCoeff();
    double z = 0.0;
    for (Eigen::Index a = 0; a < logits.cols(); ++a) {
      const double e = std::exp(logits(x, a) - m);
      probs(x, a) = e;
      z += e;
    }
    probs.row(x) /= z;
  }
}

/// Non-stationary stochastic policy pi_h(a | x), stored as per-step logits.
/// Steps are 0-based: step h of an H-step episode lives at index h.
class Policy {
 public:
  Policy() = default;

  static Policy uniform(int horizon, int num_states, int num_actions) {
    return from_logits(StepTables(horizon, StateActionTable::Zero(num_states, num_actions)));
  }

  static Policy from_logits(StepTables logits) {
    if (logits.empty()) throw InvalidInput("policy needs at least one step");
    const auto rows = logits.front().rows();
    const auto cols = logits.front().cols();
    if (rows < 1 || cols < 1) throw InvalidInput("policy tables must be non-empty");
    Policy p;
    p.probs_.resize(logits.size());
    for (std::size_t h = 0; h < logits.size(); ++h) {
      if (logits[h].rows() != rows || logits[h].cols() != cols)
        throw InvalidInput("policy logit tables have inconsistent shapes");
      if (!logits[h].allFinite()) throw InvalidInput("policy logits must be finite");
      softmax_rows(logits[h], p.probs_[h]);
    }
    p.logits_ = std::move(logits);
    return p;
  }

  /// actions[h][x] is the action taken at step h in state x.
  static Policy deterministic(const std::vector<std::vector<int>>& actions, int num_actions) {
    StepTables logits;
    logits.reserve(actions.size());
    for (const auto& row : actions) {
      StateActionTable t = StateActionTable::Constant(
          static_cast<Eigen::Index>(row.size()), num_actions, kExcludedLogit);
      for (std::size_t x = 0; x < row.size(); ++x) {
        if (row[x] < 0 || row[x] >= num_actions) throw InvalidInput("action index out of range");
        t(static_cast<Eigen::Index>(x), row[x]) = 0.0;
      }
      logits.push_back(std::move(t));
    }
    return from_logits(std::move(logits));
  }

  int horizon() const { return static_cast<int>(logits_.size()); }
  int num_states() const { return logits_.empty() ? 0 : static_cast<int>(logits_.front().rows()); }
  int num_actions() const { return logits_.empty() ? 0 : static_cast<int>(logits_.front().cols()); }

  const StepTables& logits() const { return logits_; }
  const StateActionTable& logits(int h) const { return logits_.at(h); }
  const StateActionTable& probs(int h) const { return probs_.at(h); }
  double prob(int h, int x, int a) const { return probs_.at(h)(x, a); }

  bool operator==(const Policy& other) const {
    if (logits_.size() != other.logits_.size()) return false;
    for (std::size_t h = 0; h < logits_.size(); ++h)
      if (logits_[h] != other.logits_[h]) return false;
    return true;
  }

 private:
  StepTables logits_;
  StepTables probs_;
};

/// Deterministic argmax policy of a Q table; ties go to the lowest action index.
inline Policy greedy_policy(const StepTables& q) {
  std::vector<std::vector<int>> actions(q.size());
  int num_actions = q.empty() ? 0 : static_cast<int>(q.front().cols());
  for (std::size_t h = 0; h < q.size(); ++h) {
    actions[h].resize(static_cast<std::size_t>(q[h].rows()));
    for (Eigen::Index x = 0; x < q[h].rows(); ++x) {
      int best = 0;
      for (Eigen::Index a = 1; a < q[h].cols(); ++a)
        if (q[h](x, a) > q[h](x, best)) best = static_cast<int>(a);
      actions[h][static_cast<std::size_t>(x)] = best;
    }
  }
  return Policy::deterministic(actions, num_actions);
}

}  // namespace oppo
