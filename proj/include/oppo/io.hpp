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

// JSON encodings: instance files, policies, agent checkpoints and run logs.
//
// Checkpoints store every double as a C99 hex-float string ("0x1.8p+1") so
// they round-trip bit-exactly. Other documents use plain JSON numbers, which
// nlohmann::json prints in shortest round-trip form.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oppo/agent.hpp"
#include "oppo/common.hpp"
#include "oppo/experiment.hpp"
#include "oppo/instances.hpp"
#include "oppo/mdp_core.hpp"
#include "oppo/policy.hpp"

namespace oppo {

using Json = nlohmann::json;

inline std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_hex_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw InvalidInput("malformed hex-float: " + s);
  return v;
}

enum class FloatEncoding { Number, Hex };

inline Json encode(double v, FloatEncoding enc) { return enc == FloatEncoding::Hex ? Json(hex_double(v)) : Json(v); }

inline double decode_double(const Json& j) {
  if (j.is_string()) return parse_hex_double(j.get<std::string>());
  if (j.is_number()) return j.get<double>();
  throw InvalidInput("expected a number or hex-float string");
}

inline Json vector_to_json(const Vector& v, FloatEncoding enc = FloatEncoding::Number) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(encode(v[i], enc));
  return out;
}

inline Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = decode_double(j[i]);
  return v;
}

/// Row-major nested arrays.
inline Json matrix_to_json(const Matrix& m, FloatEncoding enc = FloatEncoding::Number) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(encode(m(r, c), enc));
    out.push_back(std::move(row));
  }
  return out;
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("expected a 2-d array");
  if (j.empty()) return Matrix(0, 0);
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InvalidInput("ragged 2-d array");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = decode_double(j[r][c]);
  }
  return m;
}

inline Json tables_to_json(const StepTables& t, FloatEncoding enc = FloatEncoding::Number) {
  Json out = Json::array();
  for (const auto& m : t) out.push_back(matrix_to_json(m, enc));
  return out;
}

inline StepTables tables_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("expected an array of tables");
  StepTables out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string("missing field: ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad field '") + key + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Instance file format.

inline Json instance_to_json(const LinearMDP& mdp) {
  const int S = mdp.num_states(), A = mdp.num_actions(), d = mdp.dim();
  const FeatureMap& f = mdp.features();
  Json j;
  j["H"] = mdp.horizon();
  j["num_states"] = S;
  j["num_actions"] = A;
  j["d"] = d;
  j["feature_kind"] = to_string(f.kind());
  j["initial_state"] = mdp.initial_state();
  Json theta = Json::array();
  for (const auto& t : mdp.theta()) theta.push_back(vector_to_json(t));
  j["theta"] = std::move(theta);
  switch (f.kind()) {
    case FeatureKind::Tabular:
      j["features"] = Json::object();
      break;
    case FeatureKind::Mixture: {
      // kernels[j][x][a][x'] = q_j(x'|x,a)
      Json kernels = Json::array();
      for (const auto& q : f.kernels()) {
        Json kx = Json::array();
        for (int x = 0; x < S; ++x) {
          Json ka = Json::array();
          for (int a = 0; a < A; ++a) ka.push_back(vector_to_json(q.row(x * A + a).transpose()));
          kx.push_back(std::move(ka));
        }
        kernels.push_back(std::move(kx));
      }
      j["features"] = {{"kernels", std::move(kernels)}};
      break;
    }
    case FeatureKind::Explicit: {
      // psi[x][a][x'] = feature vector of length d
      Json psi = Json::array();
      for (int x = 0; x < S; ++x) {
        Json px = Json::array();
        for (int a = 0; a < A; ++a) {
          Json pa = Json::array();
          for (int y = 0; y < S; ++y) pa.push_back(vector_to_json(f.evaluate(x, a, y)));
          px.push_back(std::move(pa));
        }
        psi.push_back(std::move(px));
      }
      j["features"] = {{"psi", std::move(psi)}};
      break;
    }
  }
  return j;
}

inline LinearMDP instance_from_json(const Json& j) {
  const int H = required<int>(j, "H");
  const int S = required<int>(j, "num_states");
  const int A = required<int>(j, "num_actions");
  const int d = required<int>(j, "d");
  const FeatureKind kind = feature_kind_from_string(required<std::string>(j, "feature_kind"));
  const int x1 = j.value("initial_state", 0);
  if (H < 1 || S < 1 || A < 1 || d < 1) throw InvalidInput("instance sizes must be positive");
  const Json& theta_j = j.at("theta");
  if (!theta_j.is_array()) throw InvalidInput("theta must be an array");
  std::vector<Vector> theta;
  for (const auto& t : theta_j) theta.push_back(vector_from_json(t));

  FeatureMap features;
  const Json payload = j.value("features", Json::object());
  switch (kind) {
    case FeatureKind::Tabular:
      features = FeatureMap::tabular(S, A);
      break;
    case FeatureKind::Mixture: {
      const Json& kj = payload.at("kernels");
      std::vector<Matrix> kernels;
      for (const auto& k : kj) {
        Matrix q(static_cast<Eigen::Index>(S) * A, S);
        if (k.size() != static_cast<std::size_t>(S)) throw InvalidInput("mixture kernel has wrong state count");
        for (int x = 0; x < S; ++x) {
          if (k[static_cast<std::size_t>(x)].size() != static_cast<std::size_t>(A))
            throw InvalidInput("mixture kernel has wrong action count");
          for (int a = 0; a < A; ++a) {
            const Vector row = vector_from_json(k[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)]);
            if (row.size() != S) throw InvalidInput("mixture kernel row has wrong length");
            q.row(x * A + a) = row.transpose();
          }
        }
        kernels.push_back(std::move(q));
      }
      features = FeatureMap::mixture(S, A, std::move(kernels));
      break;
    }
    case FeatureKind::Explicit: {
      const Json& pj = payload.at("psi");
      Matrix psi(d, static_cast<Eigen::Index>(S) * A * S);
      if (pj.size() != static_cast<std::size_t>(S)) throw InvalidInput("psi has wrong state count");
      for (int x = 0; x < S; ++x)
        for (int a = 0; a < A; ++a)
          for (int y = 0; y < S; ++y) {
            const Vector v = vector_from_json(pj.at(static_cast<std::size_t>(x)).at(static_cast<std::size_t>(a))
                                                  .at(static_cast<std::size_t>(y)));
            if (v.size() != d) throw InvalidInput("psi vector has wrong length");
            psi.col((static_cast<Eigen::Index>(x) * A + a) * S + y) = v;
          }
      features = FeatureMap::explicit_map(S, A, std::move(psi));
      break;
    }
  }
  if (features.dim() != d) throw InvalidInput("declared d does not match the feature map");
  return LinearMDP(H, std::move(features), std::move(theta), x1);
}

// ---------------------------------------------------------------------------
// Policies and rewards.

inline Json policy_to_json(const Policy& p, FloatEncoding enc = FloatEncoding::Number) {
  return {{"horizon", p.horizon()},
          {"num_states", p.num_states()},
          {"num_actions", p.num_actions()},
          {"logits", tables_to_json(p.logits(), enc)}};
}

inline Policy policy_from_json(const Json& j) { return Policy::from_logits(tables_from_json(j.at("logits"))); }

inline Json reward_to_json(const RewardFunction& r) { return tables_to_json(r.r); }
inline RewardFunction reward_from_json(const Json& j) { return {tables_from_json(j)}; }

// ---------------------------------------------------------------------------
// Agent checkpoints (bit-exact).

inline Json hyper_to_json(const HyperParams& h, FloatEncoding enc) {
  return {{"alpha", encode(h.alpha, enc)},   {"beta", encode(h.beta, enc)},
          {"lambda", encode(h.lambda, enc)}, {"zeta", encode(h.zeta, enc)},
          {"c_beta", encode(h.c_beta, enc)}, {"K", h.episodes}};
}

inline HyperParams hyper_from_json(const Json& j) {
  HyperParams h;
  h.alpha = decode_double(j.at("alpha"));
  h.beta = decode_double(j.at("beta"));
  h.lambda = decode_double(j.at("lambda"));
  h.zeta = decode_double(j.at("zeta"));
  h.c_beta = decode_double(j.at("c_beta"));
  h.episodes = j.at("K").get<long long>();
  return h;
}

inline Json checkpoint_to_json(const AgentState& s) {
  constexpr auto hex = FloatEncoding::Hex;
  Json ridge = Json::array();
  for (const auto& acc : s.ridge) {
    ridge.push_back({{"lambda", hex_double(acc.lambda())},
                     {"gram", matrix_to_json(acc.gram(), hex)},
                     {"inverse", matrix_to_json(acc.inverse(), hex)},
                     {"target", vector_to_json(acc.target(), hex)},
                     {"updates", acc.updates()},
                     {"since_refactor", acc.since_refactor()}});
  }
  Json history = Json::array();
  for (const auto& buf : s.history) {
    Json feats = Json::array();
    for (const auto& f : buf.features) feats.push_back(vector_to_json(f, hex));
    Json targets = Json::array();
    for (double t : buf.targets) targets.push_back(hex_double(t));
    history.push_back({{"features", std::move(feats)}, {"targets", std::move(targets)}});
  }
  return {{"mode", to_string(s.mode)},
          {"k", s.episode},
          {"episode_open", s.episode_open},
          {"hyperparams", hyper_to_json(s.hyper, hex)},
          {"logits", tables_to_json(s.policy.logits(), hex)},
          {"prev_q", tables_to_json(s.prev_q, hex)},
          {"ridge", std::move(ridge)},
          {"history", std::move(history)}};
}

inline AgentState checkpoint_from_json(const Json& j) {
  AgentState s;
  s.mode = agent_mode_from_string(required<std::string>(j, "mode"));
  s.episode = required<int>(j, "k");
  s.episode_open = j.value("episode_open", false);
  s.hyper = hyper_from_json(j.at("hyperparams"));
  s.policy = Policy::from_logits(tables_from_json(j.at("logits")));
  s.prev_q = tables_from_json(j.at("prev_q"));
  for (const auto& r : j.at("ridge")) {
    s.ridge.push_back(RidgeAccumulator::restore(decode_double(r.at("lambda")), matrix_from_json(r.at("gram")),
                                                matrix_from_json(r.at("inverse")), vector_from_json(r.at("target")),
                                                r.at("updates").get<long long>(), r.at("since_refactor").get<int>()));
  }
  for (const auto& b : j.at("history")) {
    HistoryBuffer buf;
    for (const auto& f : b.at("features")) buf.features.push_back(vector_from_json(f));
    for (const auto& t : b.at("targets")) buf.targets.push_back(decode_double(t));
    if (buf.features.size() != buf.targets.size()) throw InvalidInput("history features and targets differ in length");
    s.history.push_back(std::move(buf));
  }
  const std::size_t H = s.prev_q.size();
  if (static_cast<std::size_t>(s.policy.horizon()) != H || s.ridge.size() != H || s.history.size() != H)
    throw InvalidInput("checkpoint tables disagree on the horizon");
  return s;
}

// ---------------------------------------------------------------------------
// Instance specs and run logs.

inline Json instance_spec_to_json(const InstanceSpec& s) {
  return {{"kind", to_string(s.kind)},       {"H", s.horizon},
          {"num_states", s.num_states},      {"num_actions", s.num_actions},
          {"d", s.dim},                      {"seed", s.seed},
          {"concentration", s.concentration}, {"reward_value", s.reward_value}};
}

inline InstanceSpec instance_spec_from_json(const Json& j) {
  InstanceSpec s;
  s.kind = instance_kind_from_string(required<std::string>(j, "kind"));
  s.horizon = required<int>(j, "H");
  s.num_actions = required<int>(j, "num_actions");
  if (s.kind == InstanceKind::CombinationLock) {
    s.num_states = s.horizon + 2;
    if (j.contains("num_states") && j.at("num_states").get<int>() != s.num_states)
      throw InvalidInput("combination-lock has exactly H + 2 states");
  } else {
    s.num_states = required<int>(j, "num_states");
  }
  s.seed = j.value("seed", std::uint64_t{0});
  s.concentration = j.value("concentration", 1.0);
  s.reward_value = j.value("reward_value", 1.0);
  if (s.kind == InstanceKind::LinearMixture) {
    s.dim = required<int>(j, "d");
  } else {
    s.dim = s.num_states * s.num_states * s.num_actions;
    if (j.contains("d") && j.at("d").get<int>() != s.dim) throw InvalidInput("tabular kinds require d = S^2 A");
  }
  if (s.horizon < 1 || s.num_states < 1 || s.num_actions < 1 || s.dim < 1)
    throw InvalidInput("instance sizes must be positive");
  if (!(s.concentration > 0.0)) throw InvalidInput("concentration must be positive");
  return s;
}

inline Json run_log_to_json(const RunLog& log) {
  Json eps = Json::array();
  for (const auto& e : log.episodes) {
    const auto& r = e.regret;
    eps.push_back({{"k", r.episode},
                   {"v_star", r.v_star},
                   {"v_policy", r.v_policy},
                   {"inst_regret", r.instantaneous},
                   {"cum_regret", r.cumulative},
                   {"term_i", r.term_i},
                   {"term_ii", r.term_ii},
                   {"term_iii", r.term_iii},
                   {"residual", r.residual},
                   {"bonus_sum", e.bonus_sum},
                   {"optimism_upper", e.optimism_upper},
                   {"optimism_lower", e.optimism_lower},
                   {"optimism_points", e.optimism_points},
                   {"max_abs_d", e.max_abs_d}});
  }
  return {{"config_hash", log.config_hash},
          {"instance_id", log.instance_id},
          {"mode", log.mode},
          {"seed", log.seed},
          {"hyperparams", hyper_to_json(log.hyper, FloatEncoding::Number)},
          {"wall_clock_seconds", log.wall_clock_seconds},
          {"episodes", std::move(eps)}};
}

inline RunLog run_log_from_json(const Json& j) {
  RunLog log;
  log.config_hash = required<std::string>(j, "config_hash");
  log.instance_id = required<std::string>(j, "instance_id");
  log.mode = required<std::string>(j, "mode");
  log.seed = required<std::uint64_t>(j, "seed");
  log.hyper = hyper_from_json(j.at("hyperparams"));
  log.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  for (const auto& e : j.at("episodes")) {
    EpisodeLog ep;
    ep.regret.episode = e.at("k").get<int>();
    ep.regret.v_star = e.at("v_star").get<double>();
    ep.regret.v_policy = e.at("v_policy").get<double>();
    ep.regret.instantaneous = e.at("inst_regret").get<double>();
    ep.regret.cumulative = e.at("cum_regret").get<double>();
    ep.regret.term_i = e.at("term_i").get<double>();
    ep.regret.term_ii = e.at("term_ii").get<double>();
    ep.regret.term_iii = e.at("term_iii").get<double>();
    ep.regret.residual = e.at("residual").get<double>();
    ep.bonus_sum = e.at("bonus_sum").get<double>();
    ep.optimism_upper = e.at("optimism_upper").get<int>();
    ep.optimism_lower = e.at("optimism_lower").get<int>();
    ep.optimism_points = e.at("optimism_points").get<int>();
    ep.max_abs_d = e.at("max_abs_d").get<double>();
    log.episodes.push_back(ep);
  }
  return log;
}

// ---------------------------------------------------------------------------
// Files.

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("invalid JSON in " + path.string() + ": " + e.what());
  }
}

/// Writes via a temporary sibling file and a rename so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace oppo
