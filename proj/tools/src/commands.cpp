// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <functional>
#include <iostream>

#include "jscope/corpus.hpp"
#include "jscope/dynamics.hpp"
#include "jscope/error.hpp"
#include "jscope/pathint.hpp"
#include "jscope/serialize.hpp"
#include "jscope/verify.hpp"
#include "jscope/weights_io.hpp"
#include "json_config.hpp"
#include "output.hpp"
#include "render.hpp"

namespace jscope::cli {
namespace {

using Clock = std::chrono::steady_clock;

struct Common {
  std::string out;
  bool overwrite = false;
};

/// Doubles keep full precision in the recorded default so replays are exact.
CLI::Option* add_real(CLI::App* s, const std::string& name, double& value, const std::string& help) {
  return s->add_option(name, value, help)->default_str(Json(value).dump());
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory (default: $JSCOPE_OUT_DIR, else ./jscope-out)");
  sub->add_flag("--overwrite", c.overwrite, "Replace files that already exist in the output directory");
}

Json typed(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  const char* end = s.data() + s.size();
  if (std::uint64_t u = 0; !s.empty() && std::from_chars(s.data(), end, u).ptr == end) return u;
  if (std::int64_t i = 0; !s.empty() && std::from_chars(s.data(), end, i).ptr == end) return i;
  if (double d = 0; !s.empty() && std::from_chars(s.data(), end, d).ptr == end) return d;
  return s;
}

/// Every option of `sub` with its effective value (flag, config file or default).
Json resolved_config(const CLI::App& sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1 && opt->get_items_expected_max() <= 1) {
        j[name] = typed(r.front());
      } else {
        Json arr = Json::array();
        for (const auto& v : r) arr.push_back(typed(v));
        j[name] = std::move(arr);
      }
    } else if (const auto& d = opt->get_default_str(); !d.empty()) {
      j[name] = d.front() == '[' ? Json::parse(d) : typed(d);
    }
  }
  return j;
}

void finish(const CLI::App& sub, OutputDir& out, Json body, Clock::time_point start) {
  Json m;
  m["subcommand"] = sub.get_name();
  m["tool_version"] = JSCOPE_VERSION;
  m["config"] = resolved_config(sub);
  for (auto& [k, v] : body.items()) m[k] = v;
  m["outputs"] = out.listing();
  m["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  out.write(kManifestName, dump(m));
}

std::vector<TokenId> load_prompt(const std::string& path, const std::string& text, bool bos) {
  if (!path.empty()) {
    const std::filesystem::path p(path);
    const std::string content = read_file(p);
    if (p.extension() == ".json") {
      const Json j = Json::parse(content);
      if (!j.contains("tokens")) throw ValidationError(path + ": trajectory JSON has no 'tokens' array");
      return j.at("tokens").get<std::vector<TokenId>>();
    }
    return vocab::encode_series(vocab::parse_prompt(content), bos);
  }
  if (text.empty()) throw ValidationError("a prompt is required (--prompt FILE or --prompt-text \"29,30,31\")");
  return vocab::encode_series(vocab::parse_prompt(text), bos);
}

/// "37" is the number token, "," the delimiter, "#N" the raw id N.
TokenId parse_target(const std::string& s, const ModelConfig& config) {
  if (s == ",") return vocab::kComma;
  const bool raw = !s.empty() && s.front() == '#';
  const std::string digits = raw ? s.substr(1) : s;
  long value = 0;
  const char* end = digits.data() + digits.size();
  if (digits.empty() || std::from_chars(digits.data(), end, value).ptr != end || value < 0) {
    throw ValidationError("--target '" + s + "' is not a number 10..99, ',' or #id");
  }
  if (!raw) return vocab::number_token(static_cast<int>(value));
  if (static_cast<std::size_t>(value) >= config.vocab_size) {
    throw ValidationError("--target id " + std::to_string(value) + " out of range for vocabulary of " +
                          std::to_string(config.vocab_size));
  }
  return static_cast<TokenId>(value);
}

Json seeds_json(std::initializer_list<std::pair<const char*, std::uint64_t>> seeds) {
  Json j = Json::object();
  for (const auto& [k, v] : seeds) j[k] = v;
  return j;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string system = "logistic";
  std::size_t n = 256;
  double r = 3.8;
  std::optional<double> x0;
  double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0;
  std::vector<double> init{1.0, 1.0, 1.0};
  double drift_rate = 0.0;
  double mu = 0.0, diffusion = 1.0;
  std::optional<double> dt;
  std::uint64_t seed = 0;
  bool bos = false;
  int lo = vocab::kMinNumber, hi = vocab::kMaxNumber;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* s = app.add_subcommand("simulate", "Generate a trajectory and its quantized prompt");
  s->add_option("--system", a.system, "logistic, lorenz, lorenz-drift or brownian");
  s->add_option("--n", a.n, "Number of samples");
  add_real(s, "--r", a.r, "Logistic growth rate");
  s->add_option("--x0", a.x0, "Initial value (logistic 0.5, brownian 0)");
  add_real(s, "--sigma", a.sigma, "Lorenz sigma");
  add_real(s, "--rho", a.rho, "Lorenz rho");
  add_real(s, "--beta", a.beta, "Lorenz beta");
  s->add_option("--init", a.init, "Lorenz initial state x y z")->expected(3);
  add_real(s, "--drift-rate", a.drift_rate, "Linear drift added per step (lorenz-drift)");
  add_real(s, "--mu", a.mu, "Brownian drift");
  add_real(s, "--diffusion", a.diffusion, "Brownian diffusion");
  s->add_option("--dt", a.dt, "Integration step (lorenz 0.01, brownian 1.0)");
  s->add_option("--seed", a.seed, "Noise seed (brownian)");
  s->add_flag("--bos", a.bos, "Prepend a BOS token");
  s->add_option("--lo", a.lo, "Smallest quantized number");
  s->add_option("--hi", a.hi, "Largest quantized number");
  add_common(s, a.common);
}

int cmd_simulate(const CLI::App& sub, const SimulateArgs& a) {
  const auto start = Clock::now();
  dynamics::TrajectorySpec spec;
  spec.kind = dynamics::parse_system(a.system);
  spec.n = a.n;
  spec.r = a.r;
  spec.x0 = a.x0;
  spec.sigma = a.sigma;
  spec.rho = a.rho;
  spec.beta = a.beta;
  std::copy(a.init.begin(), a.init.end(), spec.init.begin());
  spec.drift_rate = a.drift_rate;
  spec.mu = a.mu;
  spec.diffusion = a.diffusion;
  spec.dt = a.dt;
  spec.seed = a.seed;
  spec.validate();
  const auto q = dynamics::quantize(dynamics::generate(spec), a.lo, a.hi, a.bos);

  Json traj = to_json(spec, q);
  traj["manifest"] = kManifestName;
  OutputDir out(resolve_out_dir(a.common.out), a.common.overwrite);
  out.write("trajectory.json", dump(traj));
  out.write("prompt.txt", vocab::format_prompt(q.values) + "\n");
  finish(sub, out, Json{{"seeds", seeds_json({{"noise", a.seed}})}, {"inputs", Json::array()}}, start);
  std::cout << (out.dir() / "trajectory.json").string() << "\n";
  return kExitOk;
}

// dataset --------------------------------------------------------------------

struct DatasetArgs {
  Common common;
  std::string task = "motif";
  std::size_t count = 2000;
  std::uint64_t seed = 0;
  bool bos = false;
  std::size_t prefix_len = 4, motif_len = 5, gap_len = 4;
  std::size_t n = 64;
  double r_lo = 3.6, r_hi = 4.0;
};

void add_dataset(CLI::App& app, DatasetArgs& a) {
  auto* s = app.add_subcommand("dataset", "Generate a training corpus");
  s->add_option("--task", a.task, "motif (repeated-motif copying) or logistic (logistic-map series)");
  s->add_option("--count", a.count, "Number of sequences");
  s->add_option("--seed", a.seed, "Corpus seed");
  s->add_flag("--bos", a.bos, "Prepend a BOS token");
  s->add_option("--prefix-len", a.prefix_len, "motif: filler numbers before the motif");
  s->add_option("--motif-len", a.motif_len, "motif: motif length");
  s->add_option("--gap-len", a.gap_len, "motif: filler numbers between the occurrences");
  s->add_option("--n", a.n, "logistic: numbers per series");
  add_real(s, "--r-lo", a.r_lo, "logistic: smallest growth rate");
  add_real(s, "--r-hi", a.r_hi, "logistic: largest growth rate");
  add_common(s, a.common);
}

int cmd_dataset(const CLI::App& sub, const DatasetArgs& a) {
  const auto start = Clock::now();
  if (a.count == 0) throw ValidationError("--count must be positive");
  Dataset data;
  if (a.task == "motif") {
    data = corpus::motif_corpus(corpus::MotifTask{a.prefix_len, a.motif_len, a.gap_len, a.bos}, a.count, a.seed);
  } else if (a.task == "logistic") {
    data = corpus::logistic_corpus(a.count, a.n, a.seed, a.r_lo, a.r_hi, a.bos);
  } else {
    throw ValidationError("unknown --task '" + a.task + "' (expected motif or logistic)");
  }
  OutputDir out(resolve_out_dir(a.common.out), a.common.overwrite);
  out.write("dataset.txt", vocab::format_dataset(data));
  finish(sub, out, Json{{"seeds", seeds_json({{"corpus", a.seed}})}, {"inputs", Json::array()}}, start);
  std::cout << (out.dir() / "dataset.txt").string() << "\n";
  return kExitOk;
}

// train ----------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string dataset;
  std::string init;
  ModelConfig model;
  TrainParams params;
  std::size_t log_every = 0;
};

void add_model_options(CLI::App* s, ModelConfig& m) {
  s->add_option("--d-model", m.d_model, "Hidden width");
  s->add_option("--layers", m.n_layers, "Transformer blocks");
  s->add_option("--heads", m.n_heads, "Attention heads");
  s->add_option("--d-ff", m.d_ff, "MLP width");
  s->add_option("--max-seq-len", m.max_seq_len, "Longest accepted sequence");
  s->add_option("--model-seed", m.seed, "Initialization seed");
  add_real(s, "--rope-base", m.rope_base, "Rotary frequency base");
  add_real(s, "--norm-eps", m.norm_eps, "RMS-norm epsilon");
}

void add_train(CLI::App& app, TrainArgs& a) {
  auto* s = app.add_subcommand("train", "Train the toy transformer on a corpus");
  s->add_option("--dataset", a.dataset, "Corpus file (one comma-separated id sequence per line)")->required();
  s->add_option("--init", a.init, "Start from this weight file instead of a fresh initialization");
  add_model_options(s, a.model);
  s->add_option("--steps", a.params.steps, "Optimizer steps");
  add_real(s, "--lr", a.params.learning_rate, "Adam learning rate");
  s->add_option("--batch", a.params.batch_size, "Sequences per step");
  s->add_option("--warmup", a.params.warmup_steps, "Linear warmup steps");
  add_real(s, "--clip", a.params.grad_clip, "Global gradient-norm clip (<= 0 disables)");
  add_real(s, "--heldout", a.params.heldout_fraction, "Held-out fraction");
  s->add_option("--seed", a.params.seed, "Batch and split seed");
  s->add_option("--log-every", a.log_every, "Print the batch loss every N steps to stderr (0: never)");
  add_common(s, a.common);
}

int cmd_train(const CLI::App& sub, TrainArgs& a) {
  const auto start = Clock::now();
  a.model.validate();
  const Dataset data = vocab::parse_dataset(read_file(a.dataset));
  const TrainCallback log = [&](std::size_t step, double loss) {
    if (a.log_every > 0 && step % a.log_every == 0) std::cerr << "step " << step << " loss " << loss << "\n";
  };
  Json inputs = Json::array({input_entry(a.dataset)});
  TrainResult result;
  if (a.init.empty()) {
    result = train(a.model, data, a.params, log);
  } else {
    auto ckpt = load_weights(a.init, a.model);
    inputs.push_back(input_entry(a.init));
    result = train(a.model, std::move(ckpt.weights), data, a.params, log);
  }
  const std::string fingerprint = model_fingerprint(a.model, result.weights);
  const auto& rep = result.report;
  Json summary;
  summary["model"] = to_json(a.model);
  summary["model_fingerprint"] = fingerprint;
  summary["steps"] = a.params.steps;
  summary["train_sequences"] = rep.train_sequences;
  summary["heldout_sequences"] = rep.heldout_sequences;
  summary["initial_heldout_loss"] = rep.initial_heldout_loss;
  summary["heldout_loss"] = rep.heldout_loss;
  if (!rep.loss_curve.empty()) summary["final_batch_loss"] = rep.loss_curve.back();
  summary["manifest"] = kManifestName;

  OutputDir out(resolve_out_dir(a.common.out), a.common.overwrite);
  out.write("weights.jsw", serialize_weights(a.model, result.weights));
  out.write("loss.csv", render::loss_csv(rep.loss_curve));
  out.write("train.json", dump(summary));
  finish(sub, out,
         Json{{"seeds", seeds_json({{"model", a.model.seed}, {"batches", a.params.seed}})},
              {"model_fingerprint", fingerprint},
              {"inputs", inputs}},
         start);
  std::cout << (out.dir() / "weights.jsw").string() << "\n";
  return kExitOk;
}

// attribute ------------------------------------------------------------------

struct AttributeArgs {
  Common common;
  std::string weights;
  std::string prompt;
  std::string prompt_text;
  bool bos = false;
  std::string scope;
  std::string target;
  std::optional<std::size_t> leading;
  std::size_t steps = 100;
  double fisher_budget = 1e5;
  std::size_t top_k = 5;
  bool profile = false;
};

void add_attribute(CLI::App& app, AttributeArgs& a) {
  auto* s = app.add_subcommand("attribute", "Score input tokens with a Jacobian scope");
  s->add_option("--weights", a.weights, "Weight file")->required();
  auto* p = s->add_option("--prompt", a.prompt, "Prompt file: \"29,30,31\" text or a trajectory JSON");
  auto* t = s->add_option("--prompt-text", a.prompt_text, "Inline prompt, e.g. \"29,30,31\"");
  p->excludes(t);
  s->add_flag("--bos", a.bos, "Prepend a BOS token to a text prompt");
  s->add_option("--scope", a.scope, "semantic, temperature, fisher or integrated")->required();
  s->add_option("--target", a.target, "Target token: a number 10..99, ',' or #id (semantic, integrated)");
  s->add_option("--leading", a.leading, "Position whose prediction is explained (default: last)");
  s->add_option("--steps", a.steps, "Integration steps (integrated)");
  add_real(s, "--fisher-budget", a.fisher_budget, "Largest accepted Fisher cost, length x d_model");
  s->add_option("--top-k", a.top_k, "Entries in the probability panel");
  s->add_flag("--profile", a.profile, "Also write the per-alpha integrand profile (integrated)");
  add_common(s, a.common);
}

int cmd_attribute(const CLI::App& sub, const AttributeArgs& a) {
  const auto start = Clock::now();
  const ScopeKind kind = parse_scope(a.scope);
  if (kind == ScopeKind::directional) throw ValidationError("--scope directional needs an explicit direction; not available here");
  const bool needs_target = kind == ScopeKind::semantic || kind == ScopeKind::integrated_semantic;
  if (needs_target && a.target.empty()) throw ValidationError("--scope " + a.scope + " requires --target");
  if (a.profile && kind != ScopeKind::integrated_semantic) throw ValidationError("--profile applies to --scope integrated only");

  const auto ckpt = load_weights(a.weights);
  const auto& config = ckpt.config;
  const auto tokens = load_prompt(a.prompt, a.prompt_text, a.bos);
  const ScopeOptions options{a.leading};

  AttributionResult result;
  std::optional<IntegrandProfile> profile;
  switch (kind) {
    case ScopeKind::semantic:
      result = semantic_scope(config, ckpt.weights, tokens, parse_target(a.target, config), options);
      break;
    case ScopeKind::temperature:
      result = temperature_scope(config, ckpt.weights, tokens, options);
      break;
    case ScopeKind::fisher: {
      const double cost = static_cast<double>(tokens.size()) * static_cast<double>(config.d_model);
      if (cost > a.fisher_budget) {
        throw ValidationError("fisher scope: estimated cost " + std::to_string(tokens.size()) + " x " +
                              std::to_string(config.d_model) + " = " + std::to_string(static_cast<long long>(cost)) +
                              " exceeds --fisher-budget " + std::to_string(static_cast<long long>(a.fisher_budget)));
      }
      result = fisher_scope(config, ckpt.weights, tokens, options);
      break;
    }
    case ScopeKind::integrated_semantic: {
      const TokenId target = parse_target(a.target, config);
      result = integrated_semantic_scope(config, ckpt.weights, tokens, target, PathSpec{a.steps, std::nullopt}, options);
      if (a.profile) {
        std::vector<double> alphas;
        for (int k = 0; k <= 20; ++k) alphas.push_back(k / 20.0);
        profile = ig_integrand_profile(config, ckpt.weights, tokens, target, alphas, std::nullopt, options);
      }
      break;
    }
    case ScopeKind::directional:
      break;
  }

  const std::string fingerprint = model_fingerprint(config, ckpt.weights);
  Json record = to_json(result, fingerprint, config.seed, a.top_k);
  record["manifest"] = kManifestName;
  Json inputs = Json::array({input_entry(a.weights)});
  if (!a.prompt.empty()) inputs.push_back(input_entry(a.prompt));

  OutputDir out(resolve_out_dir(a.common.out), a.common.overwrite);
  out.write("attribution.json", dump(record));
  out.write("attribution.svg", render::attribution_svg(record));
  if (profile) {
    Json pj;
    pj["alphas"] = profile->alphas;
    pj["scores"] = profile->scores;
    pj["manifest"] = kManifestName;
    out.write("ig_profile.json", dump(pj));
  }
  finish(sub, out,
         Json{{"seeds", seeds_json({{"model", config.seed}})},
              {"model_fingerprint", fingerprint},
              {"inputs", inputs},
              {"backward_passes", result.backward_passes}},
         start);
  std::cout << (out.dir() / "attribution.json").string() << "\n";
  return kExitOk;
}

// verify ---------------------------------------------------------------------

struct VerifyArgs {
  Common common;
  std::string weights;
  std::string prompt_text = "29,30";
  bool bos = false;
  ModelConfig model{.d_model = 8, .n_layers = 2, .n_heads = 2, .d_ff = 16};
  verify::SuiteOptions suite;
  std::string target;
};

void add_verify(CLI::App& app, VerifyArgs& a) {
  auto* s = app.add_subcommand("verify", "Run the numerical oracle suite; exit 2 if any check fails");
  s->add_option("--weights", a.weights, "Weight file (default: a fresh model from the model options)");
  s->add_option("--prompt-text", a.prompt_text, "Prompt numbers");
  s->add_flag("--bos", a.bos, "Prepend a BOS token");
  add_model_options(s, a.model);
  s->add_option("--seed", a.suite.seed, "Oracle seed");
  s->add_option("--position", a.suite.position, "Position under test (default: leading position)");
  s->add_option("--target", a.target, "Target for the geometry check (default: argmax token)");
  s->add_option("--mc-samples", a.suite.mc_samples, "Monte Carlo samples for the trace check");
  add_real(s, "--mc-eps", a.suite.mc_eps, "Perturbation radius for the trace check");
  s->add_option("--geometry-samples", a.suite.geometry_samples, "Random perturbations for the geometry check");
  add_common(s, a.common);
}

int cmd_verify(const CLI::App& sub, VerifyArgs& a) {
  const auto start = Clock::now();
  ModelConfig config = a.model;
  Weights weights;
  Json inputs = Json::array();
  if (a.weights.empty()) {
    weights = init_weights(config);
  } else {
    auto ckpt = load_weights(a.weights);
    config = ckpt.config;
    weights = std::move(ckpt.weights);
    inputs.push_back(input_entry(a.weights));
  }
  const auto tokens = vocab::encode_series(vocab::parse_prompt(a.prompt_text), a.bos);
  if (!a.target.empty()) a.suite.target = parse_target(a.target, config);
  const auto reports = verify::run_suite(config, weights, tokens, a.suite);
  const bool pass = verify::all_passed(reports);

  const std::string fingerprint = model_fingerprint(config, weights);
  Json doc;
  doc["pass"] = pass;
  doc["model"] = to_json(config);
  doc["model_fingerprint"] = fingerprint;
  doc["tokens"] = tokens;
  Json list = Json::array();
  for (const auto& r : reports) list.push_back(to_json(r));
  doc["reports"] = std::move(list);
  doc["manifest"] = kManifestName;

  OutputDir out(resolve_out_dir(a.common.out), a.common.overwrite);
  out.write("verify.json", dump(doc));
  finish(sub, out,
         Json{{"seeds", seeds_json({{"model", config.seed}, {"oracle", a.suite.seed}})},
              {"model_fingerprint", fingerprint},
              {"inputs", inputs}},
         start);
  for (const auto& r : reports) std::cout << (r.pass ? "PASS " : "FAIL ") << r.check << "\n";
  return pass ? kExitOk : kExitNumerical;
}

// report ---------------------------------------------------------------------

struct ReportArgs {
  Common common;
  std::vector<std::string> records;
};

void add_report(CLI::App& app, ReportArgs& a) {
  auto* s = app.add_subcommand("report", "Bundle attribution records into one HTML page");
  s->add_option("records", a.records, "attribution.json files")->required();
  add_common(s, a.common);
}

int cmd_report(const CLI::App& sub, const ReportArgs& a) {
  const auto start = Clock::now();
  std::vector<Json> records;
  Json inputs = Json::array();
  for (const auto& path : a.records) {
    Json j = Json::parse(read_file(path));
    if (!j.is_object() || !j.contains("scores")) throw ValidationError(path + " is not an attribution record");
    records.push_back(std::move(j));
    inputs.push_back(input_entry(path));
  }
  OutputDir out(resolve_out_dir(a.common.out), a.common.overwrite);
  out.write("report.html", render::report_html(records, a.records));
  finish(sub, out, Json{{"inputs", inputs}}, start);
  std::cout << (out.dir() / "report.html").string() << "\n";
  return kExitOk;
}

// replay ---------------------------------------------------------------------

struct ReplayArgs {
  std::string manifest;
  std::string out;
  bool overwrite = false;
};

void add_replay(CLI::App& app, ReplayArgs& a) {
  auto* s = app.add_subcommand("replay", "Re-run the subcommand recorded in a manifest");
  s->add_option("manifest", a.manifest, "manifest.json of an earlier run")->required();
  s->add_option("--out", a.out, "Output directory for the re-run");
  s->add_flag("--overwrite", a.overwrite, "Replace files that already exist");
}

int run_args(std::vector<std::string> args);

int cmd_replay(const ReplayArgs& a) {
  const Json m = Json::parse(read_file(a.manifest));
  if (!m.contains("subcommand") || !m.contains("config")) throw ValidationError(a.manifest + " is not a run manifest");
  const auto subcommand = m.at("subcommand").get<std::string>();
  if (subcommand == "replay") throw ValidationError("cannot replay a replay manifest");
  std::vector<std::string> args{"jscope", subcommand, "--config", a.manifest};
  if (!a.out.empty()) args.insert(args.end(), {"--out", a.out});
  if (a.overwrite) args.emplace_back("--overwrite");
  if (subcommand == "report" && m.contains("inputs")) {
    for (const auto& in : m.at("inputs")) args.push_back(in.at("path").get<std::string>());
  }
  return run_args(std::move(args));
}

int run_args(std::vector<std::string> args) {
  CLI::App app{"Jacobian scope attribution for a toy transformer", "jscope"};
  app.option_defaults()->always_capture_default();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file or run manifest (flags take precedence)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  SimulateArgs simulate;
  DatasetArgs dataset;
  TrainArgs train_args;
  AttributeArgs attribute;
  VerifyArgs verify_args;
  ReportArgs report;
  ReplayArgs replay;
  add_simulate(app, simulate);
  add_dataset(app, dataset);
  add_train(app, train_args);
  add_attribute(app, attribute);
  add_verify(app, verify_args);
  add_report(app, report);
  add_replay(app, replay);

  args.erase(args.begin());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "simulate") return cmd_simulate(*sub, simulate);
    if (name == "dataset") return cmd_dataset(*sub, dataset);
    if (name == "train") return cmd_train(*sub, train_args);
    if (name == "attribute") return cmd_attribute(*sub, attribute);
    if (name == "verify") return cmd_verify(*sub, verify_args);
    if (name == "report") return cmd_report(*sub, report);
    return cmd_replay(replay);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad JSON input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace

int run(int argc, char** argv) { return run_args(std::vector<std::string>(argv, argv + argc)); }

}  // namespace jscope::cli
