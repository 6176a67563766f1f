// tests/acceptance.cc

// Copyright 2026  The prosody-mdn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end acceptance checks. Prints one line per criterion:
//
//   criterion N: PASS|FAIL  details
//
// Trained models are cached in --work and reused when the corpus
// fingerprint and training config match.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <CLI11.hpp>

#include "prosody/checkpoint.h"
#include "prosody/gmm.h"
#include "prosody/io.h"
#include "prosody/metrics.h"
#include "prosody/parallel.h"
#include "prosody/rng.h"
#include "prosody/synthdata.h"
#include "prosody/training.h"

namespace prosody {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char *format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Context {
  fs::path work;
  std::size_t threads = 1;
};

OracleSpec DeskSpec(std::size_t speakers) {
  OracleSpec spec;
  spec.vocab = 10;
  spec.speakers = speakers;
  spec.components = 5;
  spec.dim = 4;
  spec.separation = 6.0;
  spec.num_train = 2000;
  spec.num_test = 200;
  spec.seed = 1;
  return spec;
}

TrainConfig DeskTraining(std::size_t num_components) {
  TrainConfig tc;
  tc.model.num_components = num_components;
  tc.epochs = 150;
  tc.seed = 1;
  return tc;
}

PredictorParams TrainOrLoad(const Context &ctx, const std::string &name,
                            const OracleCorpus &data, const TrainConfig &tc,
                            bool use_cache = true) {
  const fs::path path = ctx.work / (name + ".ckpt");
  const std::string fingerprint = CorpusFingerprint(data.train);
  if (use_cache && fs::exists(path)) {
    Checkpoint ckpt = LoadCheckpoint(path);
    if (ckpt.train_config && *ckpt.train_config == tc && ckpt.train_state &&
        ckpt.train_state->corpus_fingerprint == fingerprint &&
        ckpt.train_state->epochs_done == tc.epochs)
      return ckpt.params;
  }
  const PredictorConfig model = ResolveForCorpus(tc.model, data);
  const TrainState state = Train(data.train, data.test, model, tc, ctx.threads);
  SaveCheckpoint(path, FromTrainState(state, tc));
  return state.params;
}

// 1. BPTT against central differences on the desk gradient-check config.
Outcome Criterion1(const Context &) {
  const auto start = Clock::now();
  const GradCheckConfig gc;
  const GradCheckReport r = RunGradCheck(gc, 1);
  const double secs = Seconds(start);
  const bool multi = gc.speakers > 0;
  return {r.pass && r.max_rel_error < 1e-3 && secs < 30.0 && multi,
          Fmt("max_rel_error %.3e over %zu arrays (tol 1e-3), %.2f s (limit 30 s)",
              r.max_rel_error, r.arrays.size(), secs)};
}

// 2. Simplex, positivity and posterior normalization over random raw outputs.
Outcome Criterion2(const Context &) {
  RandomSource rng(2);
  double worst_simplex = 0.0, worst_posterior = 0.0, min_var = INFINITY;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t m = 1 + rng.UniformIndex(8), d = 1 + rng.UniformIndex(8);
    RawGmmParams raw(m, d);
    for (double &a : raw.alpha) a = rng.Uniform(-50.0, 50.0);
    for (double &x : raw.m.data()) x = rng.Uniform(-10.0, 10.0);
    for (double &x : raw.v.data()) x = rng.Uniform(-15.0, 15.0);
    const DiagGmm g = Activate(raw);
    double sum = 0.0;
    for (double w : g.weights) sum += w;
    worst_simplex = std::max(worst_simplex, std::abs(sum - 1.0));
    for (double v : g.variances.data()) min_var = std::min(min_var, v);
    Embedding e(d);
    for (double &x : e) x = rng.Uniform(-15.0, 15.0);
    double post = 0.0;
    for (double p : Posterior(g, e)) post += p;
    worst_posterior = std::max(worst_posterior, std::abs(post - 1.0));
  }
  return {worst_simplex < 1e-12 && min_var > 0.0 && worst_posterior < 1e-12,
          Fmt("max |sum w - 1| %.2e, min variance %.3e, max |sum gamma - 1| %.2e (tol 1e-12)",
              worst_simplex, min_var, worst_posterior)};
}

// 3. Log-sum-exp density against a direct sum in extended precision.
Outcome Criterion3(const Context &) {
  RandomSource rng(3);
  const long double two_pi = 6.283185307179586476925286766559L;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = 1 + rng.UniformIndex(6), d = 1 + rng.UniformIndex(6);
    RawGmmParams raw(m, d);
    for (double &a : raw.alpha) a = rng.Uniform(-3.0, 3.0);
    for (double &x : raw.m.data()) x = rng.Uniform(-3.0, 3.0);
    for (double &x : raw.v.data()) x = rng.Uniform(-2.0, 2.0);
    Embedding e(d);
    for (double &x : e) x = rng.Uniform(-3.0, 3.0);

    long double norm = 0.0L;
    for (double a : raw.alpha) norm += std::exp(static_cast<long double>(a));
    long double density = 0.0L;
    for (std::size_t j = 0; j < m; ++j) {
      long double comp = std::exp(static_cast<long double>(raw.alpha[j])) / norm;
      for (std::size_t k = 0; k < d; ++k) {
        const long double var = std::exp(static_cast<long double>(raw.v(j, k)));
        const long double diff = e[k] - static_cast<long double>(raw.m(j, k));
        comp *= std::exp(-0.5L * diff * diff / var) / std::sqrt(two_pi * var);
      }
      density += comp;
    }
    const double direct = static_cast<double>(std::log(density));
    worst = std::max(worst, std::abs(LogDensity(Activate(raw), e) - direct));
  }
  return {worst < 1e-10, Fmt("max |log-sum-exp - direct| %.2e over 1000 cases (tol 1e-10)", worst)};
}

// 4. Test log-likelihood and generalization gap, M = 5 against M = 1.
Outcome Criterion4(const Context &ctx) {
  const auto start = Clock::now();
  const OracleCorpus data = GenCorpus(DeskSpec(1), ctx.threads);
  const PredictorParams m1 = TrainOrLoad(ctx, "desk_m1", data, DeskTraining(1), false);
  const PredictorParams m5 = TrainOrLoad(ctx, "desk_m5", data, DeskTraining(5), false);
  const double secs = Seconds(start);
  const double train1 = -MeanNllPerPhone(m1, data.train, ctx.threads);
  const double test1 = -MeanNllPerPhone(m1, data.test, ctx.threads);
  const double train5 = -MeanNllPerPhone(m5, data.train, ctx.threads);
  const double test5 = -MeanNllPerPhone(m5, data.test, ctx.threads);
  const double gap1 = std::abs(train1 - test1), gap5 = std::abs(train5 - test5);
  const double oracle = OracleMeanLoglikPerPhone(data.oracle, data.test);
  return {test5 - test1 >= 1.0 && gap1 > gap5 && secs < 300.0,
          Fmt("test LL M=1 %.3f, M=5 %.3f (diff %.3f >= 1), oracle %.3f; gap M=1 %.3f > M=5 "
              "%.3f; %.1f s (limit 300 s)",
              test1, test5, test5 - test1, oracle, gap1, gap5, secs)};
}

CloningReport TwoSpeakerReport(const Context &ctx) {
  const OracleCorpus data = GenCorpus(DeskSpec(2), ctx.threads);
  const PredictorParams model = TrainOrLoad(ctx, "two_speaker_m5", data, DeskTraining(5));
  return ComputeCloningReport(data.oracle, data.train, data.test, model, 0, 1, 1);
}

// 5. Identification accuracy and cloned-sequence correlation.
Outcome Criterion5(const Context &ctx) {
  const CloningReport r = TwoSpeakerReport(ctx);
  return {r.component_accuracy >= 0.9 && r.mean_correlation >= 0.8 &&
              r.mean_correlation > r.sampled_correlation,
          Fmt("accuracy %.3f (>= 0.9; random %.3f, majority %.3f), correlation %.3f (>= 0.8; "
              "random %.3f, sampled %.3f) over %zu phones",
              r.component_accuracy, r.random_accuracy, r.majority_accuracy, r.mean_correlation,
              r.random_correlation, r.sampled_correlation, r.phones)};
}

// 6. Cloned embeddings score higher under the target speaker.
Outcome Criterion6(const Context &ctx) {
  const CloningReport r = TwoSpeakerReport(ctx);
  return {r.affinity_margin >= 1.0,
          Fmt("log p_tgt - log p_src %.3f nats/phone (>= 1; sampled %.3f)", r.affinity_margin,
              r.sampled_affinity_margin)};
}

// 7. Sample diversity M = 5 against M = 1, and the unit-Gaussian value.
Outcome Criterion7(const Context &ctx) {
  const std::size_t dim = 4;
  PredictorConfig unit;
  unit.num_components = 1;
  unit.dim = dim;
  unit.vocab = 1;
  unit.hidden = 2;
  unit.recurrent = 2;
  // Zero parameters: N(0, I) at every position.
  const PredictorParams gaussian(unit);
  const double chi = Diversity(gaussian, PhoneSeq(200, 0), std::nullopt, 40, 7);
  const double expected = 2.0 * std::exp(std::lgamma((dim + 1) / 2.0) - std::lgamma(dim / 2.0));
  const double rel = std::abs(chi - expected) / expected;

  const OracleCorpus data = GenCorpus(DeskSpec(1), ctx.threads);
  const PredictorParams m1 = TrainOrLoad(ctx, "desk_m1", data, DeskTraining(1));
  const PredictorParams m5 = TrainOrLoad(ctx, "desk_m5", data, DeskTraining(5));
  const double d1 = CorpusDiversity(m1, data.test, 3, 1, ctx.threads);
  const double d5 = CorpusDiversity(m5, data.test, 3, 1, ctx.threads);
  return {d5 > d1 && rel < 0.05,
          Fmt("diversity M=5 %.3f vs M=1 %.3f (need M=5 > M=1); N(0,I) D=4 %.4f vs closed form "
              "%.4f (rel %.4f < 0.05)",
              d5, d1, chi, expected, rel)};
}

int RunCli(const std::string &args) {
  const std::string cmd = std::string(PROSODY_MDN_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 8. Byte-identical outputs for repeated commands; resume equals one run.
Outcome Criterion8(const Context &ctx) {
  const fs::path dir = ctx.work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string &name) { return (dir / name).string(); };
  WriteFileAtomic(p("spec.json"),
                  R"({"vocab":5,"speakers":2,"components":3,"dim":3,"num_train":60,"num_test":20})");
  WriteFileAtomic(p("full.json"),
                  R"({"model":{"num_components":3,"hidden":8,"recurrent":8},"epochs":4})");
  WriteFileAtomic(p("part.json"),
                  R"({"model":{"num_components":3,"hidden":8,"recurrent":8},"epochs":2})");

  std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"gen-data --config " + p("spec.json") + " --seed 8 --out " + p("c@"),
       {"c@/oracle.json", "c@/train.jsonl", "c@/test.jsonl"}},
      {"train --corpus " + p("c1") + " --config " + p("full.json") + " --seed 3 --out " +
           p("m@.ckpt") + " --history " + p("m@.csv"),
       {"m@.ckpt", "m@.csv"}},
      {"eval --checkpoint " + p("m1.ckpt") + " --corpus " + p("c1") + " --seed 4 --out " +
           p("e@.json") + " --csv " + p("e@.csv"),
       {"e@.json", "e@.csv"}},
      {"sample --checkpoint " + p("m1.ckpt") + " --phones 0,4,2,2,1 --speaker 1 --seed 5 --out " +
           p("s@.json"),
       {"s@.json"}},
      {"clone --checkpoint " + p("m1.ckpt") + " --corpus " + p("c1") +
           " --utterance 3 --tgt-speaker 0 --seed 6 --out " + p("k@.json"),
       {"k@.json"}},
      {"curves --checkpoint " + p("m1.ckpt") + " --seed 7 --out " + p("u@.csv") + " --summary " +
           p("u@.json"),
       {"u@.csv", "u@.json"}},
      {"gradcheck --seed 9 --out " + p("g@.json"), {"g@.json"}},
  };
  auto with = [](std::string s, char c) {
    for (char &ch : s)
      if (ch == '@') ch = c;
    return s;
  };
  std::size_t identical = 0, files = 0;
  std::string mismatch;
  for (const auto &[args, outputs] : commands) {
    // Second run uses a different thread count.
    if (RunCli(with(args, '1') + " --threads 1") != 0 ||
        RunCli(with(args, '2') + " --threads 2") != 0)
      return {false, "command failed: " + with(args, '1')};
    for (const std::string &out : outputs) {
      ++files;
      if (ReadFile(p(with(out, '1'))) == ReadFile(p(with(out, '2')))) ++identical;
      else mismatch += " " + with(out, '1');
    }
  }

  const bool part = RunCli("train --corpus " + p("c1") + " --config " + p("part.json") +
                           " --seed 3 --out " + p("part.ckpt")) == 0;
  const bool resumed = RunCli("train --corpus " + p("c1") + " --config " + p("full.json") +
                              " --seed 3 --out " + p("resumed.ckpt") + " --history " +
                              p("resumed.csv") + " --resume " + p("part.ckpt")) == 0;
  const bool same_resume = part && resumed &&
                           ReadFile(p("m1.ckpt")) == ReadFile(p("resumed.ckpt")) &&
                           ReadFile(p("m1.csv")) == ReadFile(p("resumed.csv"));
  return {identical == files && same_resume,
          Fmt("%zu/%zu output files byte-identical across repeats", identical, files) +
              (mismatch.empty() ? "" : " (differ:" + mismatch + ")") +
              (same_resume ? "; 2+2 epoch resume equals 4 epochs bit-exactly"
                           : "; resume differs from uninterrupted training")};
}

// 9. Active-component statistic on fixed weights, then on trained models.
Outcome Criterion9(const Context &ctx) {
  const auto one = ActiveComponentsFromWeights(std::vector<Vector>(10, Vector{1.0}),
                                               kDefaultThresholds);
  const auto uniform = ActiveComponentsFromWeights(
      std::vector<Vector>(10, Vector(20, 1.0 / 20.0)), kDefaultThresholds);
  const bool fixed = one == std::vector<double>{1.0, 1.0} &&
                     uniform == std::vector<double>{0.0, 20.0};

  const OracleCorpus data = GenCorpus(DeskSpec(1), ctx.threads);
  const PredictorParams m5 = TrainOrLoad(ctx, "desk_m5", data, DeskTraining(5));
  const auto trained = ActiveComponents(m5, data.test);
  return {fixed, Fmt("M=1 -> (%g, %g), uniform M=20 -> (%g, %g); trained M=5 on M*=5 data -> "
                     "(%.2f, %.2f) at thresholds (0.1, 0.01)",
                     one[0], one[1], uniform[0], uniform[1], trained[0], trained[1])};
}

}  // namespace
}  // namespace prosody

int main(int argc, char **argv) {
  using namespace prosody;
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  std::string work = "acceptance_work";
  std::size_t threads = 0;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")
      ->check(CLI::Range(1, 9));
  app.add_option("--work", work, "Directory for corpora, models and scratch files");
  app.add_option("--threads", threads, "Worker threads");
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::vector<std::function<Outcome(const Context &)>> criteria = {
      Criterion1, Criterion2, Criterion3, Criterion4, Criterion5,
      Criterion6, Criterion7, Criterion8, Criterion9};
  Context ctx;
  bool all = true;
  try {
    ctx.work = fs::absolute(work);
    fs::create_directories(ctx.work);
    ctx.threads = ResolveThreads(threads);
    for (int n : selected) {
      const Outcome o = criteria[n - 1](ctx);
      std::printf("criterion %d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
      std::fflush(stdout);
      all = all && o.pass;
    }
  } catch (const std::exception &e) {
    std::printf("error: %s\n", e.what());
    return 1;
  }
  return all ? 0 : 1;
}
