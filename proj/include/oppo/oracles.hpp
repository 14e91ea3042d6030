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

// Exact ground truth computed with full knowledge of the transition kernel:
// policy values, occupancies, the hindsight-optimal policy, regret and its
// three-term decomposition, model prediction errors, and the elliptical
// potential inequality.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "oppo/common.hpp"
#include "oppo/mdp_core.hpp"
#include "oppo/policy.hpp"
#include "oppo/policy_eval.hpp"

namespace oppo {

/// True dynamics of an instance in table form.
struct ExactModel {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  int initial_state = 0;
  TransitionTables p;

  static ExactModel from(const LinearMDP& mdp) {
    return {mdp.horizon(), mdp.num_states(), mdp.num_actions(), mdp.initial_state(), transition_tables(mdp)};
  }

  /// (P_h f)(x, a) for every (x, a), as an S x A table.
  StateActionTable apply(int h, const Vector& f) const {
    const Vector flat = p.step(h) * f;
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), num_states, num_actions);
  }
};

struct PolicyValue {
  std::vector<Vector> v;  // V_0..V_H, V_H = 0
  StepTables q;           // Q_0..Q_{H-1}
};

inline void check_shapes(const ExactModel& m, const Policy& pi, const RewardFunction& r) {
  if (pi.horizon() != m.horizon || pi.num_states() != m.num_states || pi.num_actions() != m.num_actions)
    throw InvalidInput("policy shape does not match the model");
  if (r.horizon() != m.horizon) throw InvalidInput("reward horizon does not match the model");
}

/// Backward Bellman recursion Q_h = r_h + P_h V_{h+1}, V_h = <Q_h, pi_h>.
inline PolicyValue exact_policy_value(const ExactModel& m, const Policy& pi, const RewardFunction& r) {
  check_shapes(m, pi, r);
  PolicyValue out;
  out.v.assign(m.horizon + 1, Vector::Zero(m.num_states));
  out.q.resize(m.horizon);
  for (int h = m.horizon - 1; h >= 0; --h) {
    const auto sh = static_cast<std::size_t>(h);
    out.q[sh] = r.r[sh] + m.apply(h, out.v[sh + 1]);
    out.v[sh] = out.q[sh].cwiseProduct(pi.probs(h)).rowwise().sum();
  }
  return out;
}

inline PolicyValue exact_policy_value(const LinearMDP& mdp, const Policy& pi, const RewardFunction& r) {
  return exact_policy_value(ExactModel::from(mdp), pi, r);
}

/// Per-step state distributions of pi started at the initial state.
inline std::vector<Vector> state_occupancy(const ExactModel& m, const Policy& pi) {
  std::vector<Vector> d(static_cast<std::size_t>(m.horizon), Vector::Zero(m.num_states));
  d[0][m.initial_state] = 1.0;
  for (int h = 0; h + 1 < m.horizon; ++h) {
    Vector next = Vector::Zero(m.num_states);
    for (int x = 0; x < m.num_states; ++x) {
      const double mass = d[static_cast<std::size_t>(h)][x];
      if (mass == 0.0) continue;
      for (int a = 0; a < m.num_actions; ++a) {
        const double w = mass * pi.prob(h, x, a);
        if (w == 0.0) continue;
        next += w * m.p.step(h).row(x * m.num_actions + a).transpose();
      }
    }
    d[static_cast<std::size_t>(h) + 1] = std::move(next);
  }
  return d;
}

inline constexpr double kBruteForceGuard = 1e6;

/// V^pi_1(x_1) by summing Pr(path) * reward(path) over every state-action
/// path. Each path's probability and return are built from scratch.
inline double brute_force_value(const ExactModel& m, const Policy& pi, const RewardFunction& r) {
  check_shapes(m, pi, r);
  const int H = m.horizon, S = m.num_states, A = m.num_actions;
  if (std::pow(static_cast<double>(S), H) * std::pow(static_cast<double>(A), H) > kBruteForceGuard)
    throw InvalidInput("brute_force_value: instance exceeds the enumeration guard");
  // Path digits: a_0, x_1, a_1, ..., x_{H-1}, a_{H-1}.
  const int digits = 2 * H - 1;
  std::vector<int> radix(static_cast<std::size_t>(digits));
  for (int i = 0; i < digits; ++i) radix[static_cast<std::size_t>(i)] = (i % 2 == 0) ? A : S;
  std::vector<int> idx(static_cast<std::size_t>(digits), 0);
  double total = 0.0;
  while (true) {
    double prob = 1.0, ret = 0.0;
    int x = m.initial_state;
    for (int h = 0; h < H && prob > 0.0; ++h) {
      const int a = idx[static_cast<std::size_t>(2 * h)];
      prob *= pi.prob(h, x, a);
      ret += r(h, x, a);
      if (h + 1 < H) {
        const int y = idx[static_cast<std::size_t>(2 * h + 1)];
        prob *= m.p.step(h)(x * A + a, y);
        x = y;
      }
    }
    total += prob * ret;
    int pos = digits - 1;
    while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == radix[static_cast<std::size_t>(pos)]) {
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return total;
}

inline double brute_force_value(const LinearMDP& mdp, const Policy& pi, const RewardFunction& r) {
  return brute_force_value(ExactModel::from(mdp), pi, r);
}

/// Optimal deterministic policy for the summed reward sum_k r^k (value is
/// linear in the reward), by backward dynamic programming. Ties go to the
/// lowest action index.
inline Policy hindsight_optimal_policy(const ExactModel& m, std::span<const RewardFunction> rewards) {
  if (rewards.empty()) throw InvalidInput("hindsight_optimal_policy: empty reward list");
  StepTables total(static_cast<std::size_t>(m.horizon), StateActionTable::Zero(m.num_states, m.num_actions));
  for (const auto& r : rewards) {
    if (r.horizon() != m.horizon) throw InvalidInput("reward horizon does not match the model");
    for (int h = 0; h < m.horizon; ++h) total[static_cast<std::size_t>(h)] += r.r[static_cast<std::size_t>(h)];
  }
  std::vector<std::vector<int>> actions(static_cast<std::size_t>(m.horizon),
                                        std::vector<int>(static_cast<std::size_t>(m.num_states), 0));
  Vector v_next = Vector::Zero(m.num_states);
  for (int h = m.horizon - 1; h >= 0; --h) {
    const StateActionTable q = total[static_cast<std::size_t>(h)] + m.apply(h, v_next);
    Vector v(m.num_states);
    for (int x = 0; x < m.num_states; ++x) {
      int best = 0;
      for (int a = 1; a < m.num_actions; ++a)
        if (q(x, a) > q(x, best)) best = a;
      actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(x)] = best;
      v[x] = q(x, best);
    }
    v_next = std::move(v);
  }
  return Policy::deterministic(actions, m.num_actions);
}

inline Policy hindsight_optimal_policy(const LinearMDP& mdp, std::span<const RewardFunction> rewards) {
  return hindsight_optimal_policy(ExactModel::from(mdp), rewards);
}

/// Exhaustive search over every deterministic Markov policy for the one
/// maximizing sum_k V^{pi,k}_1, scored with brute_force_value. Returns the
/// best objective and a maximizing policy.
inline std::pair<double, Policy> enumerate_best_deterministic_policy(const ExactModel& m,
                                                                      std::span<const RewardFunction> rewards) {
  const int cells = m.horizon * m.num_states;
  if (std::pow(static_cast<double>(m.num_actions), cells) > 1e5)
    throw InvalidInput("policy enumeration too large");
  std::vector<int> idx(static_cast<std::size_t>(cells), 0);
  double best = -std::numeric_limits<double>::infinity();
  Policy best_policy;
  while (true) {
    std::vector<std::vector<int>> actions(static_cast<std::size_t>(m.horizon));
    for (int h = 0; h < m.horizon; ++h)
      actions[static_cast<std::size_t>(h)].assign(idx.begin() + h * m.num_states, idx.begin() + (h + 1) * m.num_states);
    Policy pi = Policy::deterministic(actions, m.num_actions);
    double score = 0.0;
    for (const auto& r : rewards) score += brute_force_value(m, pi, r);
    if (score > best) {
      best = score;
      best_policy = std::move(pi);
    }
    int pos = cells - 1;
    while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == m.num_actions) {
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return {best, std::move(best_policy)};
}

/// E_{pi'}[sum_h <Q^pi_h(x_h, .), pi'_h(.|x_h) - pi_h(.|x_h)>], the right side
/// of the performance-difference identity.
inline double performance_difference_rhs(const ExactModel& m, const Policy& pi, const Policy& pi_prime,
                                         const RewardFunction& r) {
  const PolicyValue val = exact_policy_value(m, pi, r);
  const auto occ = state_occupancy(m, pi_prime);
  double total = 0.0;
  for (int h = 0; h < m.horizon; ++h) {
    const auto sh = static_cast<std::size_t>(h);
    const Vector adv = val.q[sh].cwiseProduct(pi_prime.probs(h) - pi.probs(h)).rowwise().sum();
    total += occ[sh].dot(adv);
  }
  return total;
}

struct RegretRecord {
  int episode = 0;
  double v_star = 0.0;   // V^{pi*,k}_1(x_1)
  double v_policy = 0.0; // V^{pi^k,k}_1(x_1)
  double instantaneous = 0.0;
  double cumulative = 0.0;
  double term_i = 0.0;
  double term_ii = 0.0;
  double term_iii = 0.0;
  double residual = 0.0;
};

/// Regret of the executed policies against the hindsight-optimal policy of
/// the realized rewards. Decomposition terms are left at zero.
inline std::vector<RegretRecord> regret(const ExactModel& m, std::span<const RewardFunction> rewards,
                                        std::span<const Policy> executed) {
  if (rewards.size() != executed.size()) throw InvalidInput("regret: reward and policy lists differ in length");
  std::vector<RegretRecord> out;
  if (rewards.empty()) return out;
  const Policy star = hindsight_optimal_policy(m, rewards);
  double cum = 0.0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    RegretRecord rec;
    rec.episode = static_cast<int>(k) + 1;
    rec.v_star = exact_policy_value(m, star, rewards[k]).v[0][m.initial_state];
    rec.v_policy = exact_policy_value(m, executed[k], rewards[k]).v[0][m.initial_state];
    rec.instantaneous = rec.v_star - rec.v_policy;
    cum += rec.instantaneous;
    rec.cumulative = cum;
    out.push_back(rec);
  }
  return out;
}

/// iota_h = r_h + P_h V_{h+1} - Q_h for every (h, x, a).
struct PredictionErrorTable {
  StepTables iota;
};

inline PredictionErrorTable prediction_error_table(const ExactModel& m, const RewardFunction& r, const StepTables& q,
                                                   const std::vector<Vector>& v) {
  if (static_cast<int>(q.size()) != m.horizon || static_cast<int>(v.size()) != m.horizon + 1)
    throw InvalidInput("prediction_error_table: table horizon mismatch");
  PredictionErrorTable out;
  out.iota.resize(static_cast<std::size_t>(m.horizon));
  for (int h = 0; h < m.horizon; ++h) {
    const auto sh = static_cast<std::size_t>(h);
    out.iota[sh] = r.r[sh] + m.apply(h, v[sh + 1]) - q[sh];
  }
  return out;
}

/// Artifacts of one executed episode needed for the decomposition.
struct EpisodeArtifacts {
  const Policy* policy = nullptr;  // pi^k
  const StepTables* q = nullptr;   // estimated Q^k
  const std::vector<Vector>* v = nullptr;  // estimated V^k, V^k_H = 0
  const Trajectory* trajectory = nullptr;
  const RewardFunction* reward = nullptr;
};

struct DecompositionTerms {
  double instantaneous = 0.0;
  double term_i = 0.0;
  double term_ii = 0.0;
  double term_iii = 0.0;
  double residual = 0.0;
  std::vector<double> d1;  // D_{k,h,1}
  std::vector<double> d2;  // D_{k,h,2}
};

/// Splits V^{pi*}_1 - V^{pi^k}_1 into
///   (i)   sum_h E_{pi*}[<Q^k_h, pi*_h - pi^k_h>]
///   (ii)  sum_h D_{k,h,1} + D_{k,h,2}   (martingale differences along the path)
///   (iii) sum_h E_{pi*}[iota_h] - iota_h(x_h, a_h)
/// The residual regret - (i) - (ii) - (iii) is zero up to rounding.
inline DecompositionTerms decomposition_terms(const ExactModel& m, const Policy& pi_star,
                                              const std::vector<Vector>& occupancy_star, const EpisodeArtifacts& ep) {
  const Policy& pi = *ep.policy;
  const StepTables& q = *ep.q;
  const std::vector<Vector>& v = *ep.v;
  const Trajectory& traj = *ep.trajectory;
  const RewardFunction& r = *ep.reward;
  const int H = m.horizon, A = m.num_actions;

  const PolicyValue truth = exact_policy_value(m, pi, r);
  const double v_star = exact_policy_value(m, pi_star, r).v[0][m.initial_state];
  const PredictionErrorTable err = prediction_error_table(m, r, q, v);

  DecompositionTerms out;
  out.instantaneous = v_star - truth.v[0][m.initial_state];
  out.d1.resize(static_cast<std::size_t>(H));
  out.d2.resize(static_cast<std::size_t>(H));
  for (int h = 0; h < H; ++h) {
    const auto sh = static_cast<std::size_t>(h);
    const Vector& occ = occupancy_star[sh];
    const Vector xi = q[sh].cwiseProduct(pi_star.probs(h) - pi.probs(h)).rowwise().sum();
    out.term_i += occ.dot(xi);
    const Vector iota_star = err.iota[sh].cwiseProduct(pi_star.probs(h)).rowwise().sum();
    const int x = traj.states[sh], a = traj.actions[sh], next = traj.states[sh + 1];
    out.term_iii += occ.dot(iota_star) - err.iota[sh](x, a);

    const auto q_gap = q[sh].row(x) - truth.q[sh].row(x);
    const double d1 = q_gap.dot(pi.probs(h).row(x)) - q_gap[a];
    const Vector v_gap = v[sh + 1] - truth.v[sh + 1];
    const double d2 = m.p.step(h).row(x * A + a).dot(v_gap) - v_gap[next];
    out.d1[sh] = d1;
    out.d2[sh] = d2;
    out.term_ii += d1 + d2;
  }
  out.residual = out.instantaneous - out.term_i - out.term_ii - out.term_iii;
  return out;
}

/// phi_V(x, a)^T Lambda^{-1} sum_tau phi^tau v^tau, i.e. (P_hat_{k,h} V)(x, a),
/// with Lambda rebuilt from the stored history and solved directly.
inline StateActionTable implicit_transition_apply(const HistoryBuffer& history, const Vector& v, double lambda,
                                                  const FeatureMap& features) {
  const int d = features.dim();
  Matrix gram = Matrix::Identity(d, d) * lambda;
  Vector u = Vector::Zero(d);
  for (std::size_t i = 0; i < history.size(); ++i) {
    gram.noalias() += history.features[i] * history.features[i].transpose();
    u.noalias() += history.features[i] * history.targets[i];
  }
  const Vector sol = gram.ldlt().solve(u);
  const Matrix phi = feature_expectation_table(features, v);
  const Vector flat = phi.transpose() * sol;
  StateActionTable out(features.num_states(), features.num_actions());
  for (int x = 0; x < features.num_states(); ++x)
    for (int a = 0; a < features.num_actions(); ++a) out(x, a) = flat[x * features.num_actions() + a];
  return out;
}

struct PotentialCheck {
  double lhs = 0.0;  // sum_j min(1, phi_j^T Lambda_j^{-1} phi_j)
  double rhs = 0.0;  // 2 log(det Lambda_{t+1} / det Lambda_1)
  bool holds(double tol = 1e-9) const { return lhs <= rhs + tol * std::max(1.0, std::abs(rhs)); }
};

inline double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("log_det_spd: matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// Elliptical potential sums for Lambda_1 = lambda I and
/// Lambda_{j+1} = Lambda_j + phi_j phi_j^T.
inline PotentialCheck elliptical_potential_check(std::span<const Vector> phis, double lambda) {
  PotentialCheck out;
  if (phis.empty()) return out;
  const Eigen::Index d = phis.front().size();
  Matrix gram = Matrix::Identity(d, d) * lambda;
  const double log_det_first = log_det_spd(gram);
  for (const auto& phi : phis) {
    if (phi.size() != d) throw InvalidInput("elliptical_potential_check: inconsistent feature lengths");
    if (phi.squaredNorm() > 0.0) {
      const double quad = phi.dot(gram.llt().solve(phi));
      out.lhs += std::min(1.0, quad);
      gram.noalias() += phi * phi.transpose();
    }
  }
  out.rhs = 2.0 * (log_det_spd(gram) - log_det_first);
  return out;
}

}  // namespace oppo
