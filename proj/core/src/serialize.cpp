// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/serialize.hpp"

#include <set>

#include "jscope/error.hpp"

namespace jscope {
namespace {

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + ": expected a JSON object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError(std::string(what) + ": unknown key '" + k + "'");
  }
}

}  // namespace

Json to_json(const ModelConfig& c) {
  return Json{{"d_model", c.d_model},   {"n_layers", c.n_layers},       {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},         {"vocab_size", c.vocab_size},   {"max_seq_len", c.max_seq_len},
              {"seed", c.seed},         {"rope_base", c.rope_base},     {"norm_eps", c.norm_eps}};
}

ModelConfig model_config_from_json(const Json& j) {
  reject_unknown(j, {"d_model", "n_layers", "n_heads", "d_ff", "vocab_size", "max_seq_len", "seed", "rope_base",
                     "norm_eps"},
                 "model config");
  ModelConfig c;
  read(j, "d_model", c.d_model);
  read(j, "n_layers", c.n_layers);
  read(j, "n_heads", c.n_heads);
  read(j, "d_ff", c.d_ff);
  read(j, "vocab_size", c.vocab_size);
  read(j, "max_seq_len", c.max_seq_len);
  read(j, "seed", c.seed);
  read(j, "rope_base", c.rope_base);
  read(j, "norm_eps", c.norm_eps);
  c.validate();
  return c;
}

Json to_json(const AttributionResult& r, const std::string& model_fingerprint, std::uint64_t seed,
             std::size_t top_k) {
  Json j;
  j["scope"] = scope_name(r.scope);
  j["tokens"] = r.tokens;
  Json text = Json::array();
  for (auto t : r.tokens) text.push_back(vocab::token_text(t));
  j["token_text"] = std::move(text);
  j["scores"] = r.scores;
  j["delimiter_mask"] = r.delimiter_mask;
  j["leading"] = r.leading;
  if (r.beta_eff) j["beta_eff"] = *r.beta_eff;
  if (r.target) j["target"] = *r.target;
  if (r.z_target) j["z_target"] = *r.z_target;
  Json top = Json::array();
  for (const auto& [id, p] : r.top_k(top_k)) top.push_back(Json{{"token", id}, {"text", vocab::token_text(id)}, {"prob", p}});
  j["top_k"] = std::move(top);
  j["backward_passes"] = r.backward_passes;
  if (r.steps) j["steps"] = *r.steps;
  if (r.baseline_fingerprint) j["baseline_fingerprint"] = *r.baseline_fingerprint;
  j["model_fingerprint"] = model_fingerprint;
  j["seed"] = seed;
  return j;
}

Json to_json(const verify::OracleReport& r) {
  Json j;
  j["check"] = r.check;
  j["pass"] = r.pass;
  j["measured"] = r.measured;
  j["reference"] = r.reference;
  j["tolerance"] = r.tolerance;
  if (r.samples) j["samples"] = *r.samples;
  if (r.step) j["step"] = *r.step;
  if (r.standard_error) j["standard_error"] = *r.standard_error;
  j["seed"] = r.seed;
  j["detail"] = r.detail;
  Json extras = Json::object();
  for (const auto& [k, v] : r.extras) extras[k] = v;
  j["extras"] = std::move(extras);
  return j;
}

Json to_json(const dynamics::TrajectorySpec& s) {
  using dynamics::SystemKind;
  Json j;
  j["system"] = dynamics::system_name(s.kind);
  j["n"] = s.n;
  switch (s.kind) {
    case SystemKind::logistic:
      j["r"] = s.r;
      j["x0"] = s.resolved_x0();
      break;
    case SystemKind::lorenz_drift:
      j["drift_rate"] = s.drift_rate;
      [[fallthrough]];
    case SystemKind::lorenz:
      j["sigma"] = s.sigma;
      j["rho"] = s.rho;
      j["beta"] = s.beta;
      j["init"] = s.init;
      j["dt"] = s.resolved_dt();
      break;
    case SystemKind::brownian:
      j["mu"] = s.mu;
      j["diffusion"] = s.diffusion;
      j["dt"] = s.resolved_dt();
      j["x0"] = s.resolved_x0();
      j["seed"] = s.seed;
      break;
  }
  return j;
}

dynamics::TrajectorySpec trajectory_spec_from_json(const Json& j) {
  reject_unknown(j, {"system", "n", "r", "x0", "sigma", "rho", "beta", "init", "drift_rate", "mu", "diffusion",
                     "seed", "dt"},
                 "trajectory spec");
  dynamics::TrajectorySpec s;
  std::string system = dynamics::system_name(s.kind);
  read(j, "system", system);
  s.kind = dynamics::parse_system(system);
  read(j, "n", s.n);
  read(j, "r", s.r);
  if (j.contains("x0")) s.x0 = j.at("x0").get<double>();
  read(j, "sigma", s.sigma);
  read(j, "rho", s.rho);
  read(j, "beta", s.beta);
  read(j, "init", s.init);
  read(j, "drift_rate", s.drift_rate);
  read(j, "mu", s.mu);
  read(j, "diffusion", s.diffusion);
  read(j, "seed", s.seed);
  if (j.contains("dt")) s.dt = j.at("dt").get<double>();
  s.validate();
  return s;
}

Json to_json(const dynamics::TrajectorySpec& spec, const dynamics::QuantizedPrompt& q) {
  Json j;
  j["spec"] = to_json(spec);
  j["raw_series"] = q.raw;
  j["values"] = q.values;
  j["tokens"] = q.tokens;
  j["prompt"] = vocab::format_prompt(q.values);
  j["lo"] = q.lo;
  j["hi"] = q.hi;
  j["scale"] = q.scale;
  j["offset"] = q.offset;
  j["bos"] = q.bos;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace jscope
