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

// Optimistic least-squares policy evaluation.
//
// For each step h the regression target is V^tau_{h+1}(x^tau_{h+1}) with
// regressor phi^tau_h(x^tau_h, a^tau_h) = sum_{x'} psi(x^tau_h, a^tau_h, x')
// V^tau_{h+1}(x'). The estimate Q_h = r_h + phi^T w + beta ||phi||_{Lambda^-1}
// is clipped to [0, H - h] (0-based h).

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "oppo/common.hpp"
#include "oppo/mdp_core.hpp"
#include "oppo/policy.hpp"

namespace oppo {

inline constexpr int kRefactorInterval = 256;
inline constexpr double kInverseDriftTol = 1e-8;

/// Gram matrix Lambda = lambda I + sum phi phi^T with a maintained inverse
/// and the target accumulator u = sum phi v.
class RidgeAccumulator {
 public:
  RidgeAccumulator() = default;

  RidgeAccumulator(int dim, double lambda)
      : lambda_(lambda),
        gram_(Matrix::Identity(dim, dim) * lambda),
        inverse_(Matrix::Identity(dim, dim) / lambda),
        target_(Vector::Zero(dim)) {
    if (dim < 1) throw InvalidInput("ridge dimension must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("ridge regularizer must be positive");
  }

  /// Lambda += phi phi^T, u += phi v; inverse by Sherman-Morrison, with a full
  /// re-factorization every kRefactorInterval updates.
  void update(const Vector& phi, double v) {
    if (phi.size() != dim()) throw InvalidInput("ridge update: feature length mismatch");
    if (!phi.allFinite() || !std::isfinite(v)) throw InvalidInput("ridge update: non-finite input");
    if (phi.squaredNorm() == 0.0) return;
    gram_.noalias() += phi * phi.transpose();
    target_.noalias() += phi * v;
    ++updates_;
    const Vector g = inverse_ * phi;
    const double denom = 1.0 + phi.dot(g);
    if (++since_refactor_ >= kRefactorInterval || !(denom >= 1.0 - 1e-12) || !std::isfinite(denom)) {
      refactorize();
      return;
    }
    inverse_.noalias() -= (g * g.transpose()) / denom;
  }

  void refactorize() {
    Eigen::LLT<Matrix> llt(gram_);
    if (llt.info() != Eigen::Success) throw std::runtime_error("ridge Gram matrix lost positive definiteness");
    inverse_ = llt.solve(Matrix::Identity(dim(), dim()));
    inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
    since_refactor_ = 0;
  }

  /// max |Lambda Lambda^{-1} - I| entrywise.
  double inverse_drift() const {
    return (gram_ * inverse_ - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  }

  /// w = Lambda^{-1} u.
  Vector weights() const { return inverse_ * target_; }

  /// phi^T Lambda^{-1} phi.
  double quadratic_form(const Vector& phi) const { return phi.dot(inverse_ * phi); }

  int dim() const { return static_cast<int>(target_.size()); }
  double lambda() const { return lambda_; }
  long long updates() const { return updates_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& inverse() const { return inverse_; }
  const Vector& target() const { return target_; }

  /// Rebuilds an accumulator from serialized parts; used by checkpoints.
  static RidgeAccumulator restore(double lambda, Matrix gram, Matrix inverse, Vector target, long long updates,
                                  int since_refactor) {
    RidgeAccumulator acc;
    acc.lambda_ = lambda;
    acc.gram_ = std::move(gram);
    acc.inverse_ = std::move(inverse);
    acc.target_ = std::move(target);
    acc.updates_ = updates;
    acc.since_refactor_ = since_refactor;
    return acc;
  }
  int since_refactor() const { return since_refactor_; }

  bool operator==(const RidgeAccumulator& o) const {
    return lambda_ == o.lambda_ && gram_ == o.gram_ && inverse_ == o.inverse_ && target_ == o.target_ &&
           updates_ == o.updates_ && since_refactor_ == o.since_refactor_;
  }

 private:
  double lambda_ = 1.0;
  Matrix gram_;
  Matrix inverse_;
  Vector target_;
  long long updates_ = 0;
  int since_refactor_ = 0;
};

inline RidgeAccumulator ridge_rank_one_update(RidgeAccumulator acc, const Vector& phi, double v) {
  acc.update(phi, v);
  return acc;
}

inline Vector solve_weights(const RidgeAccumulator& acc) { return acc.weights(); }

/// beta sqrt(phi^T Lambda^{-1} phi). A radicand below zero beyond rounding
/// noise means the maintained inverse is corrupt.
inline double bonus(const RidgeAccumulator& acc, const Vector& phi, double beta) {
  if (!(beta >= 0.0)) throw InvalidInput("bonus scale must be non-negative");
  double q = acc.quadratic_form(phi);
  if (q < 0.0) {
    if (q < -1e-12 * std::max(1.0, phi.squaredNorm())) throw std::runtime_error("negative bonus radicand");
    q = 0.0;
  }
  return beta * std::sqrt(q);
}

/// Stored regression pairs for one step, in episode order.
struct HistoryBuffer {
  std::vector<Vector> features;
  std::vector<double> targets;

  void append(Vector phi, double v) {
    features.push_back(std::move(phi));
    targets.push_back(v);
  }
  std::size_t size() const { return targets.size(); }
  bool operator==(const HistoryBuffer&) const = default;
};

/// Q_h for h = 0..H-1 and V_h for h = 0..H with V_H = 0.
struct ValueTables {
  StepTables q;
  std::vector<Vector> v;

  static ValueTables zeros(int horizon, int num_states, int num_actions) {
    ValueTables t;
    t.q.assign(horizon, StateActionTable::Zero(num_states, num_actions));
    t.v.assign(horizon + 1, Vector::Zero(num_states));
    return t;
  }
  bool operator==(const ValueTables& o) const { return q == o.q && v == o.v; }
};

struct BonusParams {
  double beta = 0.0;

  /// beta = c_beta sqrt(d H^2 log(d T / zeta)).
  static BonusParams theory(double c_beta, int dim, int horizon, long long total_steps, double zeta) {
    if (!(zeta > 0.0 && zeta <= 1.0)) throw InvalidInput("zeta must lie in (0, 1]");
    if (!(c_beta > 0.0)) throw InvalidInput("c_beta must be positive");
    const double d = dim, h = horizon, t = static_cast<double>(total_steps);
    return {c_beta * std::sqrt(d * h * h * std::log(d * t / zeta))};
  }
};

/// Output of one backward evaluation pass.
struct Evaluation {
  ValueTables values;
  StepTables q_bar;           // unclipped r + phi^T w + Gamma
  StepTables gamma;           // bonus tables
  std::vector<Matrix> phi;    // per step, d x (S*A), column x*A + a
  std::vector<Vector> w;      // per step ridge weights
};

/// Backward pass h = H-1..0 using the accumulators (which must hold the k-1
/// previous episodes) and the current policy and reward.
/// Only the known feature map is consulted, never theta.
inline Evaluation evaluate_policy(const std::vector<RidgeAccumulator>& acc, const Policy& policy,
                                  const RewardFunction& reward, const FeatureMap& features,
                                  const BonusParams& params) {
  const int H = static_cast<int>(acc.size()), S = features.num_states(), A = features.num_actions();
  if (H < 1) throw InvalidInput("evaluate_policy: need one accumulator per step");
  if (policy.horizon() != H || reward.horizon() != H) throw InvalidInput("evaluate_policy: horizon mismatch");
  if (!(params.beta >= 0.0)) throw InvalidInput("evaluate_policy: beta must be non-negative");

  Evaluation out;
  out.values = ValueTables::zeros(H, S, A);
  out.q_bar.resize(H);
  out.gamma.resize(H);
  out.phi.resize(H);
  out.w.resize(H);
  for (int h = H - 1; h >= 0; --h) {
    const auto& ridge = acc[static_cast<std::size_t>(h)];
    const Vector w = ridge.weights();
    Matrix phi = feature_expectation_table(features, out.values.v[static_cast<std::size_t>(h) + 1]);
    const Matrix g = ridge.inverse() * phi;
    const Vector fitted = phi.transpose() * w;
    StateActionTable q_bar(S, A), gamma(S, A), q(S, A);
    const double cap = static_cast<double>(H - h);
    for (int x = 0; x < S; ++x) {
      for (int a = 0; a < A; ++a) {
        const Eigen::Index j = x * A + a;
        double rad = phi.col(j).dot(g.col(j));
        if (rad < 0.0) {
          if (rad < -1e-12 * std::max(1.0, phi.col(j).squaredNorm()))
            throw std::runtime_error("negative bonus radicand");
          rad = 0.0;
        }
        gamma(x, a) = params.beta * std::sqrt(rad);
        q_bar(x, a) = reward(h, x, a) + fitted[j] + gamma(x, a);
        q(x, a) = std::max(std::min(q_bar(x, a), cap), 0.0);
      }
    }
    out.values.v[static_cast<std::size_t>(h)] = (q.cwiseProduct(policy.probs(h))).rowwise().sum();
    out.values.q[static_cast<std::size_t>(h)] = std::move(q);
    out.q_bar[static_cast<std::size_t>(h)] = std::move(q_bar);
    out.gamma[static_cast<std::size_t>(h)] = std::move(gamma);
    out.phi[static_cast<std::size_t>(h)] = std::move(phi);
    out.w[static_cast<std::size_t>(h)] = w;
  }
  return out;
}

inline Evaluation evaluate_policy(const std::vector<RidgeAccumulator>& acc, const Policy& policy,
                                  const RewardFunction& reward, const LinearMDP& mdp, const BonusParams& params) {
  if (static_cast<int>(acc.size()) != mdp.horizon()) throw InvalidInput("evaluate_policy: need one accumulator per step");
  return evaluate_policy(acc, policy, reward, mdp.features(), params);
}

/// Appends (phi^k_h(x_h, a_h), V^k_{h+1}(x_{h+1})) for every step once the
/// episode's trajectory is known.
inline void record_episode(std::vector<RidgeAccumulator>& acc, std::vector<HistoryBuffer>& history,
                           const Evaluation& eval, const Trajectory& traj, int num_actions) {
  const int H = traj.horizon();
  if (static_cast<int>(acc.size()) != H || static_cast<int>(history.size()) != H)
    throw InvalidInput("record_episode: horizon mismatch");
  for (int h = 0; h < H; ++h) {
    const auto sh = static_cast<std::size_t>(h);
    const int x = traj.states[sh], a = traj.actions[sh], next = traj.states[sh + 1];
    Vector phi = eval.phi[sh].col(x * num_actions + a);
    const double v = eval.values.v[sh + 1][next];
    acc[sh].update(phi, v);
    history[sh].append(std::move(phi), v);
  }
}

}  // namespace oppo
