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

// Episodic linear MDPs over finite state and action sets.
//
// Transitions are P_h(x'|x,a) = psi(x,a,x')^T theta_h for a known feature map
// psi and per-step parameters theta_h. Integrals over next states are finite
// sums. All step indices are 0-based (h = 0..H-1).

#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oppo/common.hpp"
#include "oppo/policy.hpp"

namespace oppo {

inline constexpr double kStochasticTol = 1e-9;
inline constexpr double kNegativeClampTol = 1e-12;

enum class FeatureKind { Tabular, Mixture, Explicit };

inline std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Tabular: return "tabular";
    case FeatureKind::Mixture: return "mixture";
    case FeatureKind::Explicit: return "explicit";
  }
  return "?";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "tabular") return FeatureKind::Tabular;
  if (s == "mixture") return FeatureKind::Mixture;
  if (s == "explicit") return FeatureKind::Explicit;
  throw InvalidInput("unknown feature_kind: " + s);
}

/// Known feature map psi: S x A x S -> R^d, materialized as a d x (S*A*S)
/// matrix whose column ((x*A + a)*S + x') is psi(x, a, x').
class FeatureMap {
 public:
  FeatureMap() = default;

  /// Canonical basis e_{(x,a,x')} of R^{S^2 A}.
  static FeatureMap tabular(int num_states, int num_actions) {
    check_sizes(num_states, num_actions);
    FeatureMap f(FeatureKind::Tabular, num_states, num_actions, num_states * num_states * num_actions);
    f.psi_ = Matrix::Identity(f.dim_, f.dim_);
    return f;
  }

  /// psi(x,a,x')_j = q_j(x'|x,a). Each kernel is an (S*A) x S row-stochastic
  /// matrix with row index x*A + a.
  static FeatureMap mixture(int num_states, int num_actions, std::vector<Matrix> kernels) {
    check_sizes(num_states, num_actions);
    if (kernels.empty()) throw InvalidInput("mixture feature map needs at least one kernel");
    FeatureMap f(FeatureKind::Mixture, num_states, num_actions, static_cast<int>(kernels.size()));
    f.psi_.resize(f.dim_, static_cast<Eigen::Index>(num_states) * num_actions * num_states);
    for (int j = 0; j < f.dim_; ++j) {
      const Matrix& q = kernels[static_cast<std::size_t>(j)];
      if (q.rows() != num_states * num_actions || q.cols() != num_states)
        throw InvalidInput("mixture kernel has wrong shape");
      for (int x = 0; x < num_states; ++x)
        for (int a = 0; a < num_actions; ++a)
          for (int y = 0; y < num_states; ++y) f.psi_(j, f.column(x, a, y)) = q(x * num_actions + a, y);
    }
    f.kernels_ = std::move(kernels);
    return f;
  }

  /// Arbitrary psi given as a d x (S*A*S) matrix in the column layout above.
  static FeatureMap explicit_map(int num_states, int num_actions, Matrix psi) {
    check_sizes(num_states, num_actions);
    if (psi.rows() < 1 || psi.cols() != static_cast<Eigen::Index>(num_states) * num_actions * num_states)
      throw InvalidInput("explicit feature matrix has wrong shape");
    if (!psi.allFinite()) throw InvalidInput("explicit feature matrix must be finite");
    FeatureMap f(FeatureKind::Explicit, num_states, num_actions, static_cast<int>(psi.rows()));
    f.psi_ = std::move(psi);
    return f;
  }

  FeatureKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  const Matrix& matrix() const { return psi_; }
  const std::vector<Matrix>& kernels() const { return kernels_; }

  Eigen::Index column(int x, int a, int next) const {
    return (static_cast<Eigen::Index>(x) * num_actions_ + a) * num_states_ + next;
  }

  Vector evaluate(int x, int a, int next) const { return psi_.col(column(x, a, next)); }

  /// d x S slice holding psi(x, a, .) column-wise.
  auto block(int x, int a) const { return psi_.middleCols(column(x, a, 0), num_states_); }

 private:
  FeatureMap(FeatureKind kind, int s, int a, int d) : kind_(kind), num_states_(s), num_actions_(a), dim_(d) {}

  static void check_sizes(int s, int a) {
    if (s < 1 || a < 1) throw InvalidInput("state and action spaces must be non-empty");
  }

  FeatureKind kind_ = FeatureKind::Tabular;
  int num_states_ = 0;
  int num_actions_ = 0;
  int dim_ = 0;
  Matrix psi_;
  std::vector<Matrix> kernels_;
};

class LinearMDP {
 public:
  LinearMDP() = default;

  LinearMDP(int horizon, FeatureMap features, std::vector<Vector> theta, int initial_state = 0)
      : horizon_(horizon), features_(std::move(features)), theta_(std::move(theta)), initial_state_(initial_state) {
    if (horizon_ < 1) throw InvalidInput("horizon must be positive");
    if (static_cast<int>(theta_.size()) != horizon_) throw InvalidInput("need one theta per step");
    for (const auto& t : theta_)
      if (t.size() != features_.dim()) throw InvalidInput("theta length must equal feature dimension");
    if (initial_state_ < 0 || initial_state_ >= features_.num_states())
      throw InvalidInput("initial state out of range");
  }

  int horizon() const { return horizon_; }
  int num_states() const { return features_.num_states(); }
  int num_actions() const { return features_.num_actions(); }
  int dim() const { return features_.dim(); }
  int initial_state() const { return initial_state_; }
  const FeatureMap& features() const { return features_; }
  const std::vector<Vector>& theta() const { return theta_; }
  const Vector& theta(int h) const { return theta_.at(static_cast<std::size_t>(h)); }

  /// psi(x,a,.)^T theta_h before any clamping.
  Vector raw_transition(int h, int x, int a) const { return features_.block(x, a).transpose() * theta(h); }

 private:
  int horizon_ = 0;
  FeatureMap features_;
  std::vector<Vector> theta_;
  int initial_state_ = 0;
};

/// Per-step reward tables r_h(x, a), entries expected in [0, 1].
struct RewardFunction {
  StepTables r;

  static RewardFunction constant(int horizon, int num_states, int num_actions, double value) {
    return {StepTables(horizon, StateActionTable::Constant(num_states, num_actions, value))};
  }
  int horizon() const { return static_cast<int>(r.size()); }
  double operator()(int h, int x, int a) const { return r[static_cast<std::size_t>(h)](x, a); }
  bool operator==(const RewardFunction& o) const { return r == o.r; }
};

struct Trajectory {
  int episode = 0;          // 1-based episode index k
  std::vector<int> states;  // x_1..x_{H+1}; the last entry is the terminal draw
  std::vector<int> actions; // a_1..a_H
  std::vector<double> rewards;

  int horizon() const { return static_cast<int>(actions.size()); }
  bool operator==(const Trajectory&) const = default;
};

struct Violation {
  std::string kind;
  int h = -1;
  int x = -1;
  int a = -1;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }

  std::string summary(std::size_t max_lines = 20) const {
    std::ostringstream os;
    if (ok()) return "valid";
    os << violations.size() << " violation(s)";
    for (std::size_t i = 0; i < violations.size() && i < max_lines; ++i) {
      const auto& v = violations[i];
      os << "\n  " << v.kind << " h=" << v.h << " x=" << v.x << " a=" << v.a << " magnitude=" << v.magnitude;
    }
    return os.str();
  }
};

/// sum_{x'} psi(x,a,x') V(x').
inline Vector feature_expectation(const LinearMDP& mdp, int x, int a, const Vector& v) {
  if (v.size() != mdp.num_states()) throw InvalidInput("value vector length must equal |S|");
  return mdp.features().block(x, a) * v;
}

/// d x (S*A) matrix whose column x*A + a is sum_{x'} psi(x,a,x') V(x').
inline Matrix feature_expectation_table(const FeatureMap& features, const Vector& v) {
  const int S = features.num_states(), A = features.num_actions();
  if (v.size() != S) throw InvalidInput("value vector length must equal |S|");
  Matrix out(features.dim(), static_cast<Eigen::Index>(S) * A);
  for (int x = 0; x < S; ++x)
    for (int a = 0; a < A; ++a) out.col(x * A + a).noalias() = features.block(x, a) * v;
  return out;
}

inline Matrix feature_expectation_table(const LinearMDP& mdp, const Vector& v) {
  return feature_expectation_table(mdp.features(), v);
}

/// P_h(.|x,a). Entries within -1e-12 of zero are clamped and the row is
/// renormalized; larger violations throw.
inline Vector transition_distribution(const LinearMDP& mdp, int h, int x, int a) {
  if (h < 0 || h >= mdp.horizon()) throw InvalidInput("step index out of range");
  if (x < 0 || x >= mdp.num_states() || a < 0 || a >= mdp.num_actions())
    throw InvalidInput("state or action index out of range");
  Vector p = mdp.raw_transition(h, x, a);
  const double total = p.sum();
  if (!std::isfinite(total) || std::abs(total - 1.0) > kStochasticTol) {
    std::ostringstream os;
    os << "transition row (h=" << h << ", x=" << x << ", a=" << a << ") sums to " << total;
    throw InvalidInput(os.str());
  }
  if (p.minCoeff() < -kNegativeClampTol) {
    std::ostringstream os;
    os << "transition row (h=" << h << ", x=" << x << ", a=" << a << ") has entry " << p.minCoeff();
    throw InvalidInput(os.str());
  }
  p = p.cwiseMax(0.0);
  return p / p.sum();
}

/// Exact transition kernels: one (S*A) x S row-stochastic matrix per step.
struct TransitionTables {
  std::vector<Matrix> p;

  const Matrix& step(int h) const { return p[static_cast<std::size_t>(h)]; }
  auto row(int h, int x, int a, int num_actions) const { return p[static_cast<std::size_t>(h)].row(x * num_actions + a); }
};

inline TransitionTables transition_tables(const LinearMDP& mdp) {
  TransitionTables t;
  const int S = mdp.num_states(), A = mdp.num_actions();
  for (int h = 0; h < mdp.horizon(); ++h) {
    Matrix m(static_cast<Eigen::Index>(S) * A, S);
    for (int x = 0; x < S; ++x)
      for (int a = 0; a < A; ++a) m.row(x * A + a) = transition_distribution(mdp, h, x, a).transpose();
    t.p.push_back(std::move(m));
  }
  return t;
}

/// Checks the linear-MDP assumption: stochastic rows, ||theta_h|| <= sqrt(d),
/// and ||sum psi V|| <= sqrt(d) H for V = 0, V = H and v_samples random V.
inline ValidationReport validate_linear_mdp(const LinearMDP& mdp, int v_samples, std::uint64_t rng_seed) {
  ValidationReport report;
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon(), d = mdp.dim();
  const double sqrt_d = std::sqrt(static_cast<double>(d));

  for (int h = 0; h < H; ++h) {
    const double norm = mdp.theta(h).norm();
    if (!(norm <= sqrt_d + 1e-9)) report.violations.push_back({"theta_norm", h, -1, -1, norm - sqrt_d});
    for (int x = 0; x < S; ++x) {
      for (int a = 0; a < A; ++a) {
        const Vector p = mdp.raw_transition(h, x, a);
        const double lo = p.minCoeff();
        if (!(lo >= -kNegativeClampTol)) report.violations.push_back({"negative_probability", h, x, a, -lo});
        const double dev = std::abs(p.sum() - 1.0);
        if (!(dev <= kStochasticTol)) report.violations.push_back({"row_sum", h, x, a, dev});
      }
    }
  }

  std::vector<Vector> tests;
  tests.push_back(Vector::Zero(S));
  tests.push_back(Vector::Constant(S, static_cast<double>(H)));
  Rng rng = make_rng(rng_seed, {0x76616cULL});
  for (int i = 0; i < v_samples; ++i) {
    Vector v(S);
    for (int s = 0; s < S; ++s) v[s] = H * uniform01(rng);
    tests.push_back(std::move(v));
  }
  const double bound = sqrt_d * H;
  for (int x = 0; x < S; ++x) {
    for (int a = 0; a < A; ++a) {
      double worst = 0.0;
      for (const auto& v : tests) worst = std::max(worst, feature_expectation(mdp, x, a, v).norm());
      if (!(worst <= bound + 1e-9)) report.violations.push_back({"feature_integral", -1, x, a, worst - bound});
    }
  }
  return report;
}

/// Tabular MDP: per-step (S*A) x S transition tables with row index x*A + a.
struct TabularMDP {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<Matrix> transitions;
  int initial_state = 0;
};

/// Embeds a tabular MDP with psi(x,a,x') = e_{(x,a,x')} and theta_h = vec(P_h),
/// so d = S^2 A.
inline LinearMDP tabular_to_linear(const TabularMDP& tab) {
  const int S = tab.num_states, A = tab.num_actions;
  if (tab.horizon < 1 || static_cast<int>(tab.transitions.size()) != tab.horizon)
    throw InvalidInput("tabular MDP needs one transition table per step");
  FeatureMap features = FeatureMap::tabular(S, A);
  std::vector<Vector> theta;
  for (int h = 0; h < tab.horizon; ++h) {
    const Matrix& p = tab.transitions[static_cast<std::size_t>(h)];
    if (p.rows() != S * A || p.cols() != S) throw InvalidInput("tabular transition table has wrong shape");
    Vector t(features.dim());
    for (int x = 0; x < S; ++x) {
      for (int a = 0; a < A; ++a) {
        const auto row = p.row(x * A + a);
        if (row.minCoeff() < 0.0 || std::abs(row.sum() - 1.0) > kStochasticTol) {
          std::ostringstream os;
          os << "non-stochastic tabular row (h=" << h << ", x=" << x << ", a=" << a << ")";
          throw InvalidInput(os.str());
        }
        for (int y = 0; y < S; ++y) t[features.column(x, a, y)] = row[y];
      }
    }
    theta.push_back(std::move(t));
  }
  return LinearMDP(tab.horizon, std::move(features), std::move(theta), tab.initial_state);
}

/// Simulates one episode: a_h ~ pi_h(.|x_h), x_{h+1} ~ P_h(.|x_h, a_h).
inline Trajectory run_episode(const LinearMDP& mdp, const Policy& policy, const RewardFunction& reward, Rng& rng,
                              int episode = 1) {
  const int H = mdp.horizon();
  if (policy.horizon() != H || policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions())
    throw InvalidInput("policy shape does not match the MDP");
  if (reward.horizon() != H) throw InvalidInput("reward horizon does not match the MDP");
  Trajectory traj;
  traj.episode = episode;
  traj.states.reserve(static_cast<std::size_t>(H) + 1);
  int x = mdp.initial_state();
  traj.states.push_back(x);
  for (int h = 0; h < H; ++h) {
    const int a = sample_categorical(policy.probs(h).row(x), rng);
    traj.actions.push_back(a);
    traj.rewards.push_back(reward(h, x, a));
    x = sample_categorical(transition_distribution(mdp, h, x, a), rng);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace oppo
