// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: one PASS/FAIL line per criterion, then a summary line.
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "jscope/corpus.hpp"
#include "jscope/dynamics.hpp"
#include "jscope/pathint.hpp"
#include "jscope/random.hpp"
#include "jscope/scopes.hpp"
#include "jscope/train.hpp"
#include "jscope/verify.hpp"
#include "jscope/weights_io.hpp"

namespace {

using namespace jscope;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

// Tolerances and thresholds, fixed before any run.
constexpr double kJacobianTol = 1e-5;
constexpr double kInfluenceTol = 1e-5;
constexpr double kConsistencyTol = 1e-10;
constexpr std::size_t kConsistencyDirections = 20;
constexpr double kFisherTol = 1e-10;
constexpr double kSlopeLo = 2.5, kSlopeHi = 3.5;
constexpr double kMcEps = 1e-3;
constexpr std::size_t kMcSamples = 10000;
constexpr std::size_t kGeometrySamples = 200;
constexpr double kGeometryEps = 1e-3;
constexpr std::size_t kTimingWidth = 64;
constexpr double kTimingFactor = 3.0;
constexpr std::size_t kIgSteps = 100;
constexpr double kEndpointTol = 1e-10;
constexpr double kCompletenessTol = 0.05;
constexpr double kLogisticTol = 1e-15;
constexpr double kBrownianSe = 4.0;
constexpr std::size_t kBrownianSteps = 100000;
constexpr std::size_t kMotifTrials = 50;
constexpr double kMotifThreshold = 0.70;

constexpr double kLimitFast = 10.0;
constexpr double kLimitMedium = 30.0;
constexpr double kLimitSlow = 120.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ModelConfig toy_config(std::size_t d = 8) {
  ModelConfig c;
  c.d_model = d;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 2 * d;
  c.max_seq_len = 64;
  c.seed = 3;
  return c;
}

struct Toy {
  ModelConfig config = toy_config();
  Weights weights = init_weights(config);
  std::vector<TokenId> tokens = vocab::encode_series({29, 30}, false);  // T = 4
  std::size_t leading() const { return tokens.size() - 1; }
  TokenId target() const { return argmax(forward(config, weights, tokens).probs.data()); }
};

Outcome gradient_fidelity(const Toy& toy) {
  const auto t0 = Clock::now();
  double worst_jac = 0.0, worst_inf = 0.0;
  bool pass = true;
  const auto v = Direction::unembedding_row(toy.weights, toy.target());
  const auto r = directional_influence(toy.config, toy.weights, toy.tokens, v);
  for (std::size_t t = 0; t < toy.tokens.size(); ++t) {
    const auto rep = verify::check_jacobian(toy.config, toy.weights, toy.tokens, t, kJacobianTol);
    worst_jac = std::max(worst_jac, rep.measured[0]);
    pass = pass && rep.pass;
    const Tensor j = full_jacobian(toy.config, toy.weights, toy.tokens, t).matrix;
    double ss = 0.0;
    for (std::size_t c = 0; c < j.cols(); ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < j.rows(); ++k) acc += v.v[k] * j.at(k, c);
      ss += acc * acc;
    }
    const double err = verify::relative_error(r.scores[t], std::sqrt(ss), 1e-12);
    worst_inf = std::max(worst_inf, err);
  }
  const double secs = seconds_since(t0);
  pass = pass && worst_inf < kInfluenceTol && secs < kLimitFast;
  return {pass, "max Jacobian rel err " + fmt("%.3g", worst_jac) + ", influence rel err " + fmt("%.3g", worst_inf) +
                    ", " + fmt("%.2f", secs) + " s"};
}

Outcome single_backward(const Toy& toy) {
  const auto t0 = Clock::now();
  const auto rep = verify::check_directional_consistency(toy.config, toy.weights, toy.tokens, kConsistencyDirections,
                                                         11, kConsistencyTol);
  const double secs = seconds_since(t0);
  return {rep.pass && secs < kLimitFast, std::to_string(kConsistencyDirections) + " directions, max err " +
                                             fmt("%.3g", rep.measured[0]) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome fisher_identities(const Toy& toy) {
  const auto t0 = Clock::now();
  // covers every position's Jacobian block
  const auto rep = verify::check_fisher_identities(toy.config, toy.weights, toy.tokens, 12, kFisherTol);
  const double secs = seconds_since(t0);
  return {rep.pass && secs < kLimitMedium, "trace err " + fmt("%.3g", rep.measured[0]) + ", min eig(F_u) " +
                                               fmt("%.3g", rep.measured[1]) + ", variance err " +
                                               fmt("%.3g", rep.measured[2]) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome kl_quadratic(const Toy& toy) {
  const auto t0 = Clock::now();
  const std::vector<double> scales = {1e-2, 1e-3, 1e-4};
  bool pass = true;
  std::string slopes;
  for (std::size_t t = 0; t < toy.tokens.size(); ++t) {
    const auto rep = verify::check_kl_quadratic(toy.config, toy.weights, toy.tokens, t, scales, 13);
    const double slope = rep.measured.empty() ? 0.0 : rep.measured[0];
    const bool degenerate = rep.detail.find("degenerate") != std::string::npos;
    pass = pass && (degenerate || (slope >= kSlopeLo && slope <= kSlopeHi));
    slopes += (t ? ", " : "") + (degenerate ? std::string("degenerate") : fmt("%.3f", slope));
  }
  const double secs = seconds_since(t0);
  return {pass && secs < kLimitMedium, "slopes [" + slopes + "], " + fmt("%.2f", secs) + " s"};
}

Outcome trace_expected_kl(const Toy& toy) {
  const auto t0 = Clock::now();
  const auto rep =
      verify::check_trace_expected_kl(toy.config, toy.weights, toy.tokens, 0, kMcEps, kMcSamples, 14);
  const double secs = seconds_since(t0);
  return {rep.pass && secs < kLimitSlow, "MC " + fmt("%.6g", rep.measured[0]) + " vs tr(F_t) " +
                                             fmt("%.6g", rep.reference[0]) + ", tol " + fmt("%.3g", rep.tolerance) +
                                             ", " + fmt("%.2f", secs) + " s"};
}

Outcome geometry(const Toy& toy) {
  const auto v = Direction::unembedding_row(toy.weights, toy.target()).v;
  bool pass = true;
  double worst = 0.0;
  for (std::size_t t = 0; t < toy.tokens.size(); ++t) {
    const auto rep = verify::check_perturbation_geometry(toy.config, toy.weights, toy.tokens, t, v, kGeometryEps,
                                                         kGeometrySamples, 15);
    pass = pass && rep.pass;
    if (!rep.measured.empty()) worst = std::max(worst, std::abs(rep.measured[0] - rep.reference[0]));
  }
  return {pass, std::to_string(kGeometrySamples) + " random perturbations per position, aligned err " +
                    fmt("%.3g", worst)};
}

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

Outcome accounting(const Toy& toy) {
  const auto rep = verify::check_backward_accounting(toy.config, toy.weights, toy.tokens, toy.target(), 8);

  ModelConfig big;
  big.d_model = kTimingWidth;
  big.n_layers = 2;
  big.n_heads = 4;
  big.d_ff = 2 * kTimingWidth;
  big.max_seq_len = 64;
  const Weights w = init_weights(big);
  std::vector<int> values;
  for (int i = 0; i < 16; ++i) values.push_back(10 + (7 * i) % 90);
  const auto tokens = vocab::encode_series(values, false);
  const double temp = best_of(5, [&] { (void)temperature_scope(big, w, tokens); });
  const double fisher = best_of(3, [&] { (void)fisher_scope(big, w, tokens); });
  const double ratio = fisher / temp;
  const double d = static_cast<double>(kTimingWidth);
  const bool timing = ratio >= d / kTimingFactor && ratio <= d * kTimingFactor;
  std::string counts;
  for (double c : rep.measured) counts += (counts.empty() ? "" : ", ") + fmt("%.0f", c);
  return {rep.pass && timing, "passes [" + counts + "] (semantic, temperature, fisher, integrated@8); d=64 " +
                                  "fisher/temperature " + fmt("%.1f", ratio) + " in [" + fmt("%.1f", d / kTimingFactor) +
                                  ", " + fmt("%.0f", d * kTimingFactor) + "]"};
}

Outcome endpoint_identity(const Toy& toy) {
  const TokenId target = toy.target();
  const std::vector<double> alpha1 = {1.0};
  const auto profile = ig_integrand_profile(toy.config, toy.weights, toy.tokens, target, alpha1);
  const auto sem = semantic_scope(toy.config, toy.weights, toy.tokens, target);
  double endpoint = 0.0;
  for (std::size_t t = 0; t < sem.scores.size(); ++t)
    endpoint = std::max(endpoint, std::abs(profile.scores[0][t] - sem.scores[t]));
  PathSpec spec;
  spec.steps = kIgSteps;
  const double residual =
      integrated_semantic_detail(toy.config, toy.weights, toy.tokens, target, spec).completeness_residual();
  return {endpoint <= kEndpointTol && residual < kCompletenessTol,
          "alpha=1 err " + fmt("%.3g", endpoint) + ", completeness residual " + fmt("%.4f", residual) + " at " +
              std::to_string(kIgSteps) + " steps (limit " + fmt("%.2f", kCompletenessTol) + ")"};
}

Outcome dynamics_checks() {
  const auto x = dynamics::logistic_map(3.8, 0.5, 3);
  const bool logistic = x[1] == 0.95 && std::abs(x[2] - 0.1805) <= kLogisticTol;

  dynamics::TrajectorySpec lorenz;
  lorenz.kind = dynamics::SystemKind::lorenz;
  bool lorenz_ok = lorenz.sigma == 10.0 && lorenz.rho == 28.0 && lorenz.beta == 8.0 / 3.0;
  try {
    const auto series = dynamics::generate(lorenz);
    lorenz_ok = lorenz_ok && std::all_of(series.begin(), series.end(), [](double v) { return std::isfinite(v); });
  } catch (const std::exception&) {
    lorenz_ok = false;
  }

  const double mu = 0.1, sigma = 1.0, dt = 1.0;
  const auto b = dynamics::brownian(mu, sigma, dt, 16, kBrownianSteps + 1);
  const double mean = (b.back() - b.front()) / static_cast<double>(kBrownianSteps);
  const double se = sigma * std::sqrt(dt / static_cast<double>(kBrownianSteps));
  const double z = std::abs(mean - mu * dt) / se;
  const bool brownian = z <= kBrownianSe;
  return {logistic && lorenz_ok && brownian,
          "x1 " + fmt("%.17g", x[1]) + ", x2 " + fmt("%.17g", x[2]) + "; lorenz defaults " +
              (lorenz_ok ? "accepted" : "rejected") + "; brownian mean off by " + fmt("%.2f", z) + " SE"};
}

Outcome motif_behavior() {
  const auto t0 = Clock::now();
  const corpus::MotifTask task;
  ModelConfig cfg = toy_config(32);
  cfg.seed = 0;
  TrainParams p;
  p.steps = 500;
  p.learning_rate = 3e-3;
  p.warmup_steps = 100;
  p.batch_size = 8;
  const auto w = train(cfg, corpus::motif_corpus(task, 2000, 5), p).weights;

  std::size_t sem_hits = 0, temp_hits = 0, predicted = 0;
  for (std::uint64_t s = 0; s < kMotifTrials; ++s) {
    const auto probe = corpus::motif_probe(task, derive_seed(999, s), 2);
    auto inside = [&](std::size_t at) { return at >= probe.window_begin && at < probe.window_end; };
    const auto sem = semantic_scope(cfg, w, probe.prompt, probe.target);
    const auto temp = temperature_scope(cfg, w, probe.prompt);
    sem_hits += inside(sem.argmax_position()) ? 1 : 0;
    temp_hits += inside(temp.argmax_position()) ? 1 : 0;
    predicted += argmax(sem.probs) == probe.target ? 1 : 0;
  }
  const double n = static_cast<double>(kMotifTrials);
  const bool pass = sem_hits / n >= kMotifThreshold && temp_hits / n >= kMotifThreshold;
  return {pass, "semantic " + std::to_string(sem_hits) + "/" + std::to_string(kMotifTrials) + ", temperature " +
                    std::to_string(temp_hits) + "/" + std::to_string(kMotifTrials) + " (threshold " +
                    fmt("%.0f%%", 100 * kMotifThreshold) + "), next-token accuracy " + std::to_string(predicted) +
                    "/" + std::to_string(kMotifTrials) + ", " + fmt("%.1f", seconds_since(t0)) + " s"};
}

#ifdef JSCOPE_CLI_PATH
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(JSCOPE_CLI_PATH) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "jscope_acceptance_replay";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "log.txt";
  const auto cfg = toy_config();
  save_weights(cfg, init_weights(cfg), root / "toy.jsw");
  const std::string w = (root / "toy.jsw").string();

  const std::vector<std::pair<std::string, std::string>> runs = {
      {"sim_logistic", "simulate --system logistic --n 32"},
      {"sim_lorenz", "simulate --system lorenz-drift --drift-rate 0.01 --n 64"},
      {"sim_brownian", "simulate --system brownian --seed 5 --n 64"},
      {"semantic", "attribute --weights " + w + " --prompt-text 29,30,31 --scope semantic --target 32"},
      {"temperature", "attribute --weights " + w + " --prompt-text 29,30,31 --scope temperature"},
      {"fisher", "attribute --weights " + w + " --prompt-text 29,30,31 --scope fisher"},
      {"integrated", "attribute --weights " + w + " --prompt-text 29,30 --scope integrated --target 31 --steps 20 --profile"},
      {"verify", "verify --mc-samples 2000"},
  };
  std::size_t files = 0, mismatches = 0, failures = 0;
  std::string first_problem;
  for (const auto& [name, args] : runs) {
    const fs::path a = root / name, b = root / (name + "_replay");
    if (shell(args + " --out " + a.string(), log) != 0 ||
        shell("replay " + (a / "manifest.json").string() + " --out " + b.string(), log) != 0) {
      ++failures;
      if (first_problem.empty()) first_problem = name + " did not run";
      continue;
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      const auto ext = entry.path().extension();
      if (entry.path().filename() == "manifest.json" || (ext != ".json" && ext != ".svg")) continue;
      ++files;
      if (slurp(entry.path()) != slurp(b / entry.path().filename())) {
        ++mismatches;
        if (first_problem.empty()) first_problem = (fs::path(name) / entry.path().filename()).string() + " differs";
      }
    }
  }
  // report consumes attribution records produced above
  const fs::path ra = root / "report", rb = root / "report_replay";
  const std::string records = (root / "semantic" / "attribution.json").string() + " " +
                              (root / "fisher" / "attribution.json").string();
  if (shell("report " + records + " --out " + ra.string(), log) == 0 &&
      shell("replay " + (ra / "manifest.json").string() + " --out " + rb.string(), log) == 0) {
    ++files;
    if (slurp(ra / "report.html") != slurp(rb / "report.html")) ++mismatches;
  } else {
    ++failures;
  }
  const bool pass = failures == 0 && mismatches == 0 && files > 0;
  if (pass) fs::remove_all(root);
  return {pass, std::to_string(files) + " JSON/SVG/HTML outputs replayed from manifests, " +
                    std::to_string(mismatches) + " differ, " + std::to_string(failures) + " runs failed" +
                    (first_problem.empty() ? "" : " (" + first_problem + ")")};
}
#else
Outcome determinism() { return {false, "jscope CLI not built (configure with JSCOPE_BUILD_TOOLS=ON)"}; }
#endif

}  // namespace

int main() {
  const Toy toy;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"gradient fidelity", [&] { return gradient_fidelity(toy); }},
      {"single-backward influence", [&] { return single_backward(toy); }},
      {"fisher identities", [&] { return fisher_identities(toy); }},
      {"KL quadratic form", [&] { return kl_quadratic(toy); }},
      {"trace vs expected KL", [&] { return trace_expected_kl(toy); }},
      {"perturbation geometry", [&] { return geometry(toy); }},
      {"backward-pass accounting", [&] { return accounting(toy); }},
      {"path endpoint and completeness", [&] { return endpoint_identity(toy); }},
      {"dynamics generators", [] { return dynamics_checks(); }},
      {"motif retrieval (trained model)", [] { return motif_behavior(); }},
      {"manifest determinism", [] { return determinism(); }},
  };
  std::size_t passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    passed += o.pass ? 1 : 0;
    std::printf("criterion %2zu %-4s %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu criteria evaluated, %zu passed, %zu failed\n", criteria.size(), passed,
              criteria.size() - passed);
  return passed == criteria.size() ? 0 : 1;
}
