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

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace oppo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A per-step table indexed [state, action].
using StateActionTable = Matrix;

/// One table per step h = 1..H, stored at index h - 1.
using StepTables = std::vector<StateActionTable>;

/// Thrown when inputs violate an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream derivation: each coordinate is folded through the
/// mixer so a stream depends only on its own (seed, c1, c2, ...) tuple.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> coords) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t c : coords) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t master,
                    std::initializer_list<std::uint64_t> coords = {}) {
  return Rng(derive_seed(master, coords));
}

/// Uniform double in [0, 1) built from the top 53 bits of one draw; unlike
/// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Samples an index from a probability vector by inverse CDF.
template <typename Probs>
int sample_categorical(const Probs& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  const int n = static_cast<int>(p.size());
  int last_positive = 0;
  for (int i = 0; i < n; ++i) {
    if (p[i] <= 0.0) continue;
    last_positive = i;
    acc += p[i];
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace oppo
