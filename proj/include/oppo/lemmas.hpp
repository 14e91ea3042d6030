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

// Executable property checks. Each check draws its own random cases from a
// seed and reports the worst observed residual or margin.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oppo/adversary.hpp"
#include "oppo/agent.hpp"
#include "oppo/common.hpp"
#include "oppo/experiment.hpp"
#include "oppo/instances.hpp"
#include "oppo/mdp_core.hpp"
#include "oppo/oracles.hpp"
#include "oppo/policy.hpp"
#include "oppo/policy_eval.hpp"
#include "oppo/policy_opt.hpp"

namespace oppo {

struct PropertyResult {
  std::string name;
  bool hard = true;      // identities and deterministic inequalities
  bool passed = false;
  double worst = 0.0;    // worst residual, margin or rate, see detail
  long long checks = 0;  // number of scalar comparisons made
  std::string detail;
};

struct SizeBounds {
  int max_horizon = 5;
  int max_states = 6;
  int max_actions = 4;
};

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline InstanceSpec random_tabular_spec(Rng& rng, const SizeBounds& b) {
  InstanceSpec s;
  s.kind = InstanceKind::TabularRandom;
  s.horizon = uniform_int(rng, 1, b.max_horizon);
  s.num_states = uniform_int(rng, 1, b.max_states);
  s.num_actions = uniform_int(rng, 1, b.max_actions);
  s.dim = s.num_states * s.num_states * s.num_actions;
  s.seed = rng();
  return s;
}

/// Softmax policy with N(0, scale^2) logits.
inline Policy random_policy(int horizon, int num_states, int num_actions, Rng& rng, double scale = 2.0) {
  std::normal_distribution<double> n(0.0, scale);
  StepTables logits(static_cast<std::size_t>(horizon), StateActionTable(num_states, num_actions));
  for (auto& t : logits)
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return Policy::from_logits(std::move(logits));
}

/// Euclidean projection onto the probability simplex.
inline Vector project_to_simplex(const Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, tau = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) tau = t;
  }
  return (v.array() - tau).cwiseMax(0.0).matrix();
}

inline std::string format_worst(const char* label, double v) {
  std::ostringstream os;
  os.precision(3);
  os << label << "=" << std::scientific << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// mdp_core

/// Validator, transition row sums, linearity of the feature expectation and
/// phi^T theta = P V, over random tabular and mixture instances.
inline PropertyResult check_linear_mdp_invariants(int instances, const SizeBounds& b, std::uint64_t seed) {
  PropertyResult out{"linear MDP invariants", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x01});
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < instances; ++i) {
    InstanceSpec spec = random_tabular_spec(rng, b);
    if (i % 2 == 1) {
      spec.kind = InstanceKind::LinearMixture;
      spec.dim = uniform_int(rng, 1, 8);
    }
    const LinearMDP mdp = make_instance(spec);
    const ValidationReport rep = validate_linear_mdp(mdp, 4, rng());
    out.checks += 1;
    if (!rep.ok()) {
      out.worst = std::numeric_limits<double>::infinity();
      out.detail = "validator: " + rep.summary();
      return out;
    }
    const int S = mdp.num_states(), A = mdp.num_actions();
    Vector v1(S), v2(S);
    for (int x = 0; x < S; ++x) {
      v1[x] = n(rng);
      v2[x] = n(rng);
    }
    const double c1 = n(rng), c2 = n(rng);
    const Matrix lhs = feature_expectation_table(mdp, c1 * v1 + c2 * v2);
    const Matrix rhs = c1 * feature_expectation_table(mdp, v1) + c2 * feature_expectation_table(mdp, v2);
    out.worst = std::max(out.worst, (lhs - rhs).cwiseAbs().maxCoeff());
    const Matrix phi = feature_expectation_table(mdp, v1);
    for (int h = 0; h < mdp.horizon(); ++h)
      for (int x = 0; x < S; ++x)
        for (int a = 0; a < A; ++a) {
          const Vector p = transition_distribution(mdp, h, x, a);
          const double pv = p.dot(v1);
          const double lin = phi.col(x * A + a).dot(mdp.theta()[static_cast<std::size_t>(h)]);
          out.worst = std::max({out.worst, std::abs(pv - lin), std::abs(p.sum() - 1.0)});
          out.checks += 2;
        }
  }
  out.passed = out.worst <= 1e-10;
  out.detail = format_worst("max_residual", out.worst);
  return out;
}

// ---------------------------------------------------------------------------
// policy_opt

/// The multiplicative update maximizes the regularized gain: no simplex
/// perturbation of its output does better by more than 1e-9.
inline PropertyResult check_closed_form_optimality(int rows, int perturbations, std::uint64_t seed) {
  PropertyResult out{"mirror-descent closed form", true, false, -std::numeric_limits<double>::infinity(), 0, ""};
  Rng rng = make_rng(seed, {0x02});
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < rows; ++i) {
    const int A = uniform_int(rng, 2, 6);
    const int H = uniform_int(rng, 1, 5);
    const double alpha = std::pow(10.0, -3.0 + 4.0 * uniform01(rng));
    const Vector prior = sample_dirichlet(A, 1.0, rng);
    StateActionTable q(1, A);
    for (int a = 0; a < A; ++a) q(0, a) = H * uniform01(rng);
    StateActionTable logits = prior.transpose().array().log().matrix();
    const Policy prev = Policy::from_logits({logits});
    const Policy next = improve_policy(prev, {q}, StepSize(alpha));
    const Vector p = next.probs(0).row(0).transpose();
    const Vector qr = q.row(0).transpose();
    const double best = regularized_gain(qr, p, prior, StepSize(alpha));
    for (int j = 0; j < perturbations; ++j) {
      Vector cand;
      if (j % 4 == 3) {
        cand = sample_dirichlet(A, 1.0, rng);
      } else {
        const double scale = std::pow(10.0, -1.0 - 2.0 * (j % 4));
        Vector noise(A);
        for (int a = 0; a < A; ++a) noise[a] = scale * n(rng);
        cand = project_to_simplex(p + noise);
      }
      const double g = regularized_gain(qr, cand, prior, StepSize(alpha));
      out.worst = std::max(out.worst, g - best);
      ++out.checks;
    }
  }
  out.passed = out.worst <= 1e-9;
  out.detail = format_worst("max_improvement", out.worst);
  return out;
}

/// <Q, p* - p> <= alpha H^2 / 2 + (KL(p*||p) - KL(p*||p')) / alpha.
inline PropertyResult check_one_step_descent(int draws, std::uint64_t seed) {
  PropertyResult out{"one-step descent", true, false, std::numeric_limits<double>::infinity(), 0, ""};
  Rng rng = make_rng(seed, {0x03});
  for (int i = 0; i < draws; ++i) {
    const int H = 1 + i % 5;
    const int A = uniform_int(rng, 2, 6);
    const double alpha = (i % 10 == 0) ? 1.0 : std::pow(10.0, -3.0 + 3.0 * uniform01(rng));
    const Vector p_star = sample_dirichlet(A, 0.5, rng);
    const Vector p = sample_dirichlet(A, 1.0, rng);
    StateActionTable q(1, A);
    for (int a = 0; a < A; ++a) q(0, a) = H * uniform01(rng);
    const StateActionTable logits = p.transpose().array().log().matrix();
    const Policy next = improve_policy(Policy::from_logits({logits}), {q}, StepSize(alpha));
    const Vector p_next = next.probs(0).row(0).transpose();
    const double lhs = q.row(0).dot((p_star - p).transpose());
    const double rhs = alpha * H * H / 2.0 + (kl_divergence(p_star, p) - kl_divergence(p_star, p_next)) / alpha;
    out.worst = std::min(out.worst, rhs - lhs);
    ++out.checks;
  }
  out.passed = out.worst >= -1e-9;
  out.detail = format_worst("min_margin", out.worst);
  return out;
}

/// Row normalization and invariance of the update to a constant shift of Q.
inline PropertyResult check_update_normalization(int draws, std::uint64_t seed) {
  PropertyResult out{"update normalization and shift invariance", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x04});
  for (int i = 0; i < draws; ++i) {
    const int H = uniform_int(rng, 1, 4), S = uniform_int(rng, 1, 5), A = uniform_int(rng, 1, 5);
    const Policy prev = random_policy(H, S, A, rng);
    StepTables q(static_cast<std::size_t>(H), StateActionTable(S, A)), shifted;
    for (auto& t : q)
      for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = H * uniform01(rng);
    const double c = 10.0 * (uniform01(rng) - 0.5);
    for (const auto& t : q) shifted.push_back(t.array() + c);
    const StepSize alpha(uniform01(rng));
    const Policy a = improve_policy(prev, q, alpha), b2 = improve_policy(prev, shifted, alpha);
    for (int h = 0; h < H; ++h) {
      out.worst = std::max(out.worst, (a.probs(h).rowwise().sum().array() - 1.0).abs().maxCoeff());
      out.worst = std::max(out.worst, (a.probs(h) - b2.probs(h)).cwiseAbs().maxCoeff());
      out.checks += 2;
    }
  }
  out.passed = out.worst <= 1e-12;
  out.detail = format_worst("max_deviation", out.worst);
  return out;
}

// ---------------------------------------------------------------------------
// policy_eval

/// Runs a short OPPO agent and checks, at every evaluation:
///   r + P V - Q_bar = (P - P_hat) V - Gamma,
///   Q, V within [0, H - h],
///   ridge weights beat random alternatives on the regularized objective.
inline PropertyResult check_evaluation_invariants(int runs, int episodes, std::uint64_t seed) {
  PropertyResult out{"evaluation identities", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x05});
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_identity = 0.0, worst_clip = 0.0, worst_ridge = 0.0;
  for (int run = 0; run < runs; ++run) {
    InstanceSpec spec = random_tabular_spec(rng, {4, 4, 3});
    if (run % 2 == 1) {
      spec.kind = InstanceKind::LinearMixture;
      spec.dim = uniform_int(rng, 1, 6);
    }
    const LinearMDP mdp = make_instance(spec);
    const ExactModel model = ExactModel::from(mdp);
    const int H = mdp.horizon();
    HyperParams hyper;
    hyper.alpha = 0.5;
    hyper.beta = 0.5 + uniform01(rng);
    hyper.lambda = 0.5 + uniform01(rng);
    hyper.episodes = episodes;
    Agent agent(mdp.features(), H, AgentMode::OPPO, hyper);
    for (int k = 1; k <= episodes; ++k) {
      const RewardFunction reward = random_reward(H, mdp.num_states(), mdp.num_actions(), rng());
      const Policy& pi = agent.begin_episode();
      Rng env = make_rng(seed, {0x05, static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(k)});
      const Trajectory traj = run_episode(mdp, pi, reward, env, k);
      const std::vector<HistoryBuffer> before = agent.state().history;
      const std::vector<RidgeAccumulator> ridge_before = agent.state().ridge;
      const Evaluation eval = *agent.end_episode(traj, reward);
      for (int h = 0; h < H; ++h) {
        const auto sh = static_cast<std::size_t>(h);
        const Vector& v_next = eval.values.v[sh + 1];
        const StateActionTable pv = model.apply(h, v_next);
        const StateActionTable phat = implicit_transition_apply(before[sh], v_next, hyper.lambda, mdp.features());
        const StateActionTable lhs = reward.r[sh] + pv - eval.q_bar[sh];
        const StateActionTable rhs = pv - phat - eval.gamma[sh];
        worst_identity = std::max(worst_identity, (lhs - rhs).cwiseAbs().maxCoeff());
        const double cap = H - h;
        const auto& q = eval.values.q[sh];
        worst_clip = std::max({worst_clip, -q.minCoeff(), q.maxCoeff() - cap, -eval.values.v[sh].minCoeff(),
                               eval.values.v[sh].maxCoeff() - cap});
        out.checks += 2;

        // M(w) + lambda |w|^2 at the stored solution versus random points.
        const HistoryBuffer& hist = before[sh];
        const Vector w = ridge_before[sh].weights();
        auto objective = [&](const Vector& u) {
          double m = hyper.lambda * u.squaredNorm();
          for (std::size_t t = 0; t < hist.size(); ++t) {
            const double e = hist.targets[t] - hist.features[t].dot(u);
            m += e * e;
          }
          return m;
        };
        const double base = objective(w);
        for (int j = 0; j < 20; ++j) {
          Vector u = w;
          const double scale = std::pow(10.0, -3.0 + 3.0 * uniform01(rng));
          for (Eigen::Index c = 0; c < u.size(); ++c) u[c] += scale * n(rng);
          worst_ridge = std::max(worst_ridge, base - objective(u));
          ++out.checks;
        }
      }
    }
  }
  out.worst = std::max({worst_identity / 1e-8, worst_clip / 1e-12, worst_ridge / 1e-9});
  out.passed = worst_identity <= 1e-8 && worst_clip <= 1e-12 && worst_ridge <= 1e-9;
  out.detail = format_worst("identity", worst_identity) + " " + format_worst("clip_excess", worst_clip) + " " +
               format_worst("ridge_gap", worst_ridge);
  return out;
}

/// Bonus at a fixed feature never grows as updates accumulate.
inline PropertyResult check_monotone_bonus(int sequences, int length, std::uint64_t seed) {
  PropertyResult out{"monotone bonus", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x06});
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < sequences; ++i) {
    const int d = uniform_int(rng, 1, 10);
    RidgeAccumulator acc(d, 0.1 + uniform01(rng));
    Vector probe(d);
    for (int c = 0; c < d; ++c) probe[c] = n(rng);
    double last = bonus(acc, probe, 1.0);
    for (int t = 0; t < length; ++t) {
      Vector phi(d);
      for (int c = 0; c < d; ++c) phi[c] = (t % 3 == 0 ? probe[c] : n(rng));
      acc.update(phi, n(rng));
      const double b = bonus(acc, probe, 1.0);
      out.worst = std::max(out.worst, b - last);
      last = b;
      ++out.checks;
    }
  }
  out.passed = out.worst <= 1e-12;
  out.detail = format_worst("max_increase", out.worst);
  return out;
}

// ---------------------------------------------------------------------------
// agent

/// OPPO logits equal the cumulative sum of alpha Q over previous episodes, and
/// a large alpha concentrates on the greedy action set.
inline PropertyResult check_agent_invariants(int runs, int episodes, std::uint64_t seed) {
  PropertyResult out{"agent cumulative logits and greedy limit", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x07});
  double worst_logit = 0.0, worst_mass = 0.0;
  for (int run = 0; run < runs; ++run) {
    const InstanceSpec spec = random_tabular_spec(rng, {3, 4, 3});
    const LinearMDP mdp = make_instance(spec);
    const int H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    HyperParams hyper;
    hyper.alpha = 0.3;
    hyper.beta = 1.0;
    hyper.episodes = episodes;
    Agent agent(mdp.features(), H, AgentMode::OPPO, hyper);
    StepTables sum(static_cast<std::size_t>(H), StateActionTable::Zero(S, A));
    for (int k = 1; k <= episodes; ++k) {
      const Policy& pi = agent.begin_episode();
      // Compare up to a per-row constant: the update subtracts the row max.
      for (int h = 0; h < H; ++h) {
        const auto sh = static_cast<std::size_t>(h);
        StateActionTable diff = pi.logits(h) - hyper.alpha * sum[sh];
        for (int x = 0; x < S; ++x) diff.row(x).array() -= diff(x, 0);
        worst_logit = std::max(worst_logit, diff.cwiseAbs().maxCoeff() / std::max(1.0, sum[sh].cwiseAbs().maxCoeff()));
        ++out.checks;
      }
      const RewardFunction reward = random_reward(H, S, A, rng());
      Rng env = make_rng(seed, {0x07, static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(k)});
      const Trajectory traj = run_episode(mdp, pi, reward, env, k);
      const Evaluation eval = *agent.end_episode(traj, reward);
      for (int h = 0; h < H; ++h) sum[static_cast<std::size_t>(h)] += eval.values.q[static_cast<std::size_t>(h)];
    }
    // Greedy limit on a fixed random table.
    StepTables q(static_cast<std::size_t>(H), StateActionTable(S, A));
    for (auto& t : q)
      for (Eigen::Index j = 0; j < t.size(); ++j) t.data()[j] = std::round(4.0 * uniform01(rng)) / 4.0;
    const Policy big = improve_policy(Policy::uniform(H, S, A), q, StepSize(1e4));
    for (int h = 0; h < H; ++h)
      for (int x = 0; x < S; ++x) {
        const auto& row = q[static_cast<std::size_t>(h)].row(x);
        const double m = row.maxCoeff();
        double mass = 0.0;
        for (int a = 0; a < A; ++a)
          if (row[a] >= m) mass += big.prob(h, x, a);
        worst_mass = std::max(worst_mass, 1.0 - mass);
        ++out.checks;
      }
  }
  out.worst = std::max(worst_logit / 1e-9, worst_mass / 1e-3);
  out.passed = worst_logit <= 1e-9 && worst_mass <= 1e-3;
  out.detail = format_worst("logit_residual", worst_logit) + " " + format_worst("greedy_mass_gap", worst_mass);
  return out;
}

// ---------------------------------------------------------------------------
// adversary

/// Fixed and PeriodicSwitch ignore the history contents.
inline PropertyResult check_oblivious_adversaries(int draws, std::uint64_t seed) {
  PropertyResult out{"oblivious adversaries ignore history", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x08});
  const int H = 3, S = 3, A = 2;
  const std::vector<RewardFunction> bases{random_reward(H, S, A, 1), random_reward(H, S, A, 2),
                                          random_reward(H, S, A, 3)};
  for (int i = 0; i < draws; ++i) {
    const int len = uniform_int(rng, 0, 20);
    History h1, h2;
    for (int k = 1; k <= len; ++k) {
      Trajectory t1{k, {}, {}, {}}, t2{k, {}, {}, {}};
      for (int s = 0; s <= H; ++s) {
        t1.states.push_back(uniform_int(rng, 0, S - 1));
        t2.states.push_back(uniform_int(rng, 0, S - 1));
      }
      for (int s = 0; s < H; ++s) {
        t1.actions.push_back(uniform_int(rng, 0, A - 1));
        t2.actions.push_back(uniform_int(rng, 0, A - 1));
        t1.rewards.push_back(0.0);
        t2.rewards.push_back(0.0);
      }
      h1.append(t1, bases[0]);
      h2.append(t2, bases[1]);
    }
    for (const AdversaryKind kind : {AdversaryKind::fixed(), AdversaryKind::periodic(uniform_int(rng, 1, 7))}) {
      Rng r1 = make_rng(seed, {0x08, 1}), r2 = make_rng(seed, {0x08, 2});
      const RewardFunction a = next_reward(kind, h1, bases, r1), b = next_reward(kind, h2, bases, r2);
      for (int h = 0; h < H; ++h)
        out.worst = std::max(out.worst, (a.r[static_cast<std::size_t>(h)] - b.r[static_cast<std::size_t>(h)]).cwiseAbs().maxCoeff());
      ++out.checks;
    }
  }
  out.passed = out.worst == 0.0;
  out.detail = format_worst("max_difference", out.worst);
  return out;
}

// ---------------------------------------------------------------------------
// oracles

/// V^{pi'} - V^{pi} equals the occupancy-weighted advantage sum.
inline PropertyResult check_performance_difference(int instances, const SizeBounds& b, std::uint64_t seed) {
  PropertyResult out{"performance difference", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x09});
  for (int i = 0; i < instances; ++i) {
    const InstanceSpec spec = random_tabular_spec(rng, b);
    const ExactModel m = ExactModel::from(make_instance(spec));
    const int H = m.horizon, S = m.num_states, A = m.num_actions;
    const Policy pi = random_policy(H, S, A, rng), pi_prime = random_policy(H, S, A, rng);
    const RewardFunction r = random_reward(H, S, A, rng());
    const double lhs = exact_policy_value(m, pi_prime, r).v[0][m.initial_state] -
                       exact_policy_value(m, pi, r).v[0][m.initial_state];
    const double rhs = performance_difference_rhs(m, pi, pi_prime, r);
    out.worst = std::max(out.worst, std::abs(lhs - rhs));
    ++out.checks;
  }
  out.passed = out.worst <= 1e-9;
  out.detail = format_worst("max_residual", out.worst);
  return out;
}

/// Dynamic-programming values against explicit path enumeration. Instance
/// sizes are capped at H = 4, |S| = |A| = 3 so enumeration stays under the
/// brute-force guard.
inline PropertyResult check_value_oracles(int instances, std::uint64_t seed, const SizeBounds& b = {4, 3, 3}) {
  PropertyResult out{"exact value vs path enumeration", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x0a});
  const SizeBounds tiny{std::min(b.max_horizon, 4), std::min(b.max_states, 3), std::min(b.max_actions, 3)};
  for (int i = 0; i < instances; ++i) {
    const InstanceSpec spec = random_tabular_spec(rng, tiny);
    const ExactModel m = ExactModel::from(make_instance(spec));
    const Policy pi = random_policy(m.horizon, m.num_states, m.num_actions, rng);
    const RewardFunction r = random_reward(m.horizon, m.num_states, m.num_actions, rng());
    const double dp = exact_policy_value(m, pi, r).v[0][m.initial_state];
    out.worst = std::max(out.worst, std::abs(dp - brute_force_value(m, pi, r)));
    ++out.checks;
  }
  out.passed = out.worst <= 1e-12;
  out.detail = format_worst("max_abs_diff", out.worst);
  return out;
}

/// Summed-reward dynamic programming against enumeration of all
/// deterministic policies (|S| = |A| = H = 2, three episodes).
inline PropertyResult check_hindsight_oracle(int instances, std::uint64_t seed) {
  PropertyResult out{"hindsight optimum vs policy enumeration", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x0b});
  for (int i = 0; i < instances; ++i) {
    InstanceSpec spec;
    spec.horizon = 2;
    spec.num_states = 2;
    spec.num_actions = 2;
    spec.dim = 8;
    spec.seed = rng();
    const ExactModel m = ExactModel::from(make_instance(spec));
    std::vector<RewardFunction> rewards;
    for (int k = 0; k < 3; ++k) rewards.push_back(random_reward(2, 2, 2, rng()));
    const Policy star = hindsight_optimal_policy(m, rewards);
    double dp_score = 0.0;
    for (const auto& r : rewards) dp_score += brute_force_value(m, star, r);
    const auto [best, best_policy] = enumerate_best_deterministic_policy(m, rewards);
    (void)best_policy;
    out.worst = std::max(out.worst, std::abs(dp_score - best));
    ++out.checks;
  }
  out.passed = out.worst <= 1e-12;
  out.detail = format_worst("max_score_gap", out.worst);
  return out;
}

/// Per-run diagnostics collected from run_cell for the decomposition,
/// optimism and potential checks.
struct DecompositionRun {
  double max_residual = 0.0;
  double max_abs_d = 0.0;
  long long upper_violations = 0;
  long long lower_violations = 0;
  long long points = 0;
  int horizon = 0;
  double lambda = 1.0;
  std::vector<std::vector<Vector>> features;
};

/// One OPPO cell on a fixed reward; beta from the theory formula with c_beta.
inline DecompositionRun decomposition_run(const InstanceSpec& spec, long long episodes, double c_beta,
                                          std::uint64_t seed, std::uint64_t reward_seed) {
  const LinearMDP mdp = make_instance(spec);
  const ExactModel model = ExactModel::from(mdp);
  HyperParams hyper;
  hyper.episodes = episodes;
  hyper.c_beta = c_beta;
  const long long T = static_cast<long long>(spec.horizon) * episodes;
  hyper.alpha = StepSize::theory_default(spec.num_actions, spec.horizon, T).value();
  hyper.beta = BonusParams::theory(c_beta, mdp.dim(), spec.horizon, T, hyper.zeta).beta;
  const AdversarySetup adv{AdversaryKind::fixed(),
                           {random_reward(spec.horizon, spec.num_states, spec.num_actions, reward_seed)}};
  CellOptions opts;
  opts.keep_features = true;
  CellResult res = run_cell(mdp, model, adv, AgentMode::OPPO, hyper, seed, opts);
  DecompositionRun out;
  out.horizon = spec.horizon;
  out.lambda = hyper.lambda;
  for (const auto& e : res.log.episodes) {
    out.max_residual = std::max(out.max_residual, std::abs(e.regret.residual));
    out.max_abs_d = std::max(out.max_abs_d, e.max_abs_d);
    out.upper_violations += e.optimism_upper;
    out.lower_violations += e.optimism_lower;
    out.points += e.optimism_points;
  }
  out.features = std::move(res.features);
  return out;
}

inline PropertyResult check_decomposition(const std::vector<DecompositionRun>& runs) {
  PropertyResult out{"regret decomposition", true, false, 0.0, 0, ""};
  double worst_d_ratio = 0.0;
  for (const auto& r : runs) {
    out.worst = std::max(out.worst, r.max_residual);
    worst_d_ratio = std::max(worst_d_ratio, r.max_abs_d / (2.0 * r.horizon));
    ++out.checks;
  }
  out.passed = out.worst <= 1e-6 && worst_d_ratio <= 1.0;
  out.detail = format_worst("max_residual", out.worst) + " " + format_worst("max_|D|/2H", worst_d_ratio);
  return out;
}

/// zero_required: every violation counts as failure; otherwise the
/// aggregated upper-violation rate must not exceed zeta.
inline PropertyResult check_optimism(const std::vector<DecompositionRun>& runs, bool zero_required, double zeta,
                                     const std::string& label) {
  PropertyResult out{label, false, false, 0.0, 0, ""};
  long long upper = 0, lower = 0, points = 0;
  for (const auto& r : runs) {
    upper += r.upper_violations;
    lower += r.lower_violations;
    points += r.points;
  }
  out.checks = points;
  const double rate = points ? static_cast<double>(upper) / static_cast<double>(points) : 0.0;
  out.worst = rate;
  out.passed = zero_required ? (upper == 0 && lower == 0) : rate <= zeta;
  std::ostringstream os;
  os << "upper=" << upper << " lower=" << lower << " points=" << points << " " << format_worst("rate", rate);
  out.detail = os.str();
  return out;
}

inline PropertyResult check_elliptical_potential(const std::vector<DecompositionRun>& runs) {
  PropertyResult out{"elliptical potential", true, false, -std::numeric_limits<double>::infinity(), 0, ""};
  bool ok = true;
  for (const auto& r : runs)
    for (const auto& seq : r.features) {
      const PotentialCheck c = elliptical_potential_check(seq, r.lambda);
      ok = ok && c.holds();
      out.worst = std::max(out.worst, c.lhs - c.rhs);
      ++out.checks;
    }
  const std::vector<Vector> unit(3, Vector::Ones(1));
  const PotentialCheck d1 = elliptical_potential_check(unit, 1.0);
  const bool analytic = std::abs(d1.lhs - 11.0 / 6.0) <= 1e-12 && std::abs(d1.rhs - 2.0 * std::log(4.0)) <= 1e-12 &&
                        d1.holds();
  ++out.checks;
  out.passed = ok && analytic;
  std::ostringstream os;
  os.precision(5);
  os << format_worst("max(lhs-rhs)", out.worst) << " d1=(" << d1.lhs << ", " << d1.rhs << ")";
  out.detail = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// instances

/// Generated instances validate; lock values match closed forms; generation
/// is a pure function of the spec.
inline PropertyResult check_instance_invariants(int seeds, std::uint64_t seed) {
  PropertyResult out{"instance generators", true, false, 0.0, 0, ""};
  Rng rng = make_rng(seed, {0x0c});
  for (int i = 0; i < seeds; ++i) {
    InstanceSpec tab{InstanceKind::TabularRandom, 3, 4, 2, 32, rng(), 1.0, 1.0};
    InstanceSpec lin{InstanceKind::LinearMixture, 3, 4, 2, 1 << (1 + i % 3), rng(), 1.0, 1.0};
    for (const auto& spec : {tab, lin}) {
      const LinearMDP a = make_instance(spec), b = make_instance(spec);
      if (!validate_linear_mdp(a, 2, rng()).ok() || a.features().matrix() != b.features().matrix() ||
          a.theta() != b.theta())
        out.worst = std::numeric_limits<double>::infinity();
      ++out.checks;
    }
    const int H = uniform_int(rng, 2, 5), A = uniform_int(rng, 2, 3);
    const CombinationLock lock = combination_lock(H, A, 1.0, rng());
    const ExactModel m = ExactModel::from(lock.mdp);
    const std::vector<RewardFunction> single{lock.reward};
    const Policy star = hindsight_optimal_policy(m, single);
    const double v_star = exact_policy_value(m, star, lock.reward).v[0][0];
    const double v_unif = exact_policy_value(m, Policy::uniform(H, H + 2, A), lock.reward).v[0][0];
    out.worst = std::max({out.worst, std::abs(v_star - 1.0), std::abs(v_unif - std::pow(1.0 / A, H))});
    out.checks += 2;
  }
  out.passed = out.worst <= 1e-12;
  out.detail = format_worst("max_value_error", out.worst);
  return out;
}

// ---------------------------------------------------------------------------

struct LemmaReport {
  std::vector<PropertyResult> results;
  bool hard_ok() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return !r.hard || r.passed; });
  }
};

/// Full property suite. seed_count scales the number of random instances;
/// the default 100 matches the sizes used by the acceptance checks.
inline LemmaReport check_lemmas(int seed_count = 100, const SizeBounds& sizes = {}, std::uint64_t seed = 20260101) {
  if (seed_count < 1) throw InvalidInput("seed count must be positive");
  if (sizes.max_horizon < 1 || sizes.max_states < 1 || sizes.max_actions < 1)
    throw InvalidInput("size bounds must be positive");
  LemmaReport rep;
  rep.results.push_back(check_linear_mdp_invariants(seed_count, sizes, seed));
  rep.results.push_back(check_closed_form_optimality(std::max(10, seed_count * 10), 1000, seed));
  rep.results.push_back(check_one_step_descent(std::max(100, seed_count * 100), seed));
  rep.results.push_back(check_update_normalization(seed_count, seed));
  rep.results.push_back(check_evaluation_invariants(std::max(2, seed_count / 10), 20, seed));
  rep.results.push_back(check_monotone_bonus(seed_count, 50, seed));
  rep.results.push_back(check_agent_invariants(std::max(2, seed_count / 10), 15, seed));
  rep.results.push_back(check_oblivious_adversaries(seed_count, seed));
  rep.results.push_back(check_performance_difference(seed_count, sizes, seed));
  rep.results.push_back(check_value_oracles(seed_count, seed, sizes));
  rep.results.push_back(check_hindsight_oracle(std::max(5, seed_count / 2), seed));
  rep.results.push_back(check_instance_invariants(std::max(5, seed_count / 2), seed));

  const InstanceSpec spec{InstanceKind::TabularRandom, 4, 5, 3, 75, 7, 1.0, 1.0};
  const int runs = std::max(2, std::min(20, seed_count / 5));
  std::vector<DecompositionRun> loose, strict;
  for (int s = 1; s <= runs; ++s) {
    loose.push_back(decomposition_run(spec, 200, 1.0, static_cast<std::uint64_t>(s), 7));
    strict.push_back(decomposition_run(spec, 200, 10.0, static_cast<std::uint64_t>(s), 7));
  }
  rep.results.push_back(check_decomposition(loose));
  rep.results.push_back(check_elliptical_potential(loose));
  rep.results.push_back(check_optimism(strict, true, 0.05, "optimism at c_beta = 10"));
  rep.results.push_back(check_optimism(loose, false, 0.05, "optimism rate at c_beta = 1"));
  return rep;
}

}  // namespace oppo
