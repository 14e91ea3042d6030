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

// KL-regularized policy improvement (exponential weights / mirror descent).

#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "oppo/common.hpp"
#include "oppo/policy.hpp"

namespace oppo {

/// Positive, finite mirror-descent step size alpha.
class StepSize {
 public:
  explicit StepSize(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInput("step size must be finite and non-negative");
  }

  /// alpha = sqrt(2 log|A| / (H T)) with T = H K total steps.
  static StepSize theory_default(int num_actions, int horizon, long long total_steps) {
    if (num_actions < 1 || horizon < 1 || total_steps < 1) throw InvalidInput("sizes must be positive");
    return StepSize(std::sqrt(2.0 * std::log(static_cast<double>(num_actions)) /
                              (static_cast<double>(horizon) * static_cast<double>(total_steps))));
  }

  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// KL(p || q) = sum_a p(a) log(p(a)/q(a)) with 0 log 0 = 0. Throws when p puts
/// mass where q has none.
template <typename P, typename Q>
double kl_divergence(const P& p, const Q& q) {
  if (p.size() != q.size()) throw InvalidInput("kl_divergence: length mismatch");
  double total = 0.0;
  for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(p.size()); ++a) {
    const double pa = p[a];
    if (pa <= 0.0) continue;
    const double qa = q[a];
    if (qa <= 0.0) throw InvalidInput("kl_divergence: support of p not contained in support of q");
    total += pa * std::log(pa / qa);
  }
  return total < 0.0 ? 0.0 : total;
}

/// <q_row, p> - KL(p || p_prev) / alpha: the per-state improvement objective.
template <typename Qr, typename P, typename Pp>
double regularized_gain(const Qr& q_row, const P& p, const Pp& p_prev, StepSize alpha) {
  if (q_row.size() != p.size() || p.size() != p_prev.size()) throw InvalidInput("regularized_gain: length mismatch");
  double linear = 0.0;
  for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(p.size()); ++a) linear += q_row[a] * p[a];
  const double kl = kl_divergence(p, p_prev);
  if (kl == 0.0) return linear;
  if (alpha.value() == 0.0) return -std::numeric_limits<double>::infinity();
  return linear - kl / alpha.value();
}

/// pi'_h(.|x) proportional to pi_h(.|x) exp(alpha Q_h(x,.)), kept as logits
/// l + alpha Q shifted so each row's max is 0.
inline Policy improve_policy(const Policy& prev, const StepTables& q, StepSize alpha) {
  if (static_cast<int>(q.size()) != prev.horizon()) throw InvalidInput("improve_policy: horizon mismatch");
  StepTables logits = prev.logits();
  for (std::size_t h = 0; h < logits.size(); ++h) {
    if (q[h].rows() != logits[h].rows() || q[h].cols() != logits[h].cols())
      throw InvalidInput("improve_policy: Q table shape mismatch");
    if (!q[h].allFinite()) throw InvalidInput("improve_policy: Q must be finite");
    if (alpha.value() != 0.0) logits[h] += alpha.value() * q[h];
    for (Eigen::Index x = 0; x < logits[h].rows(); ++x) logits[h].row(x).array() -= logits[h].row(x).maxCoeff();
  }
  return Policy::from_logits(std::move(logits));
}

}  // namespace oppo
