// tests/training_test.cc

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

#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "prosody/checkpoint.h"
#include "prosody/error.h"
#include "prosody/training.h"
#include "test_util.h"

namespace prosody {
namespace {

ParamSet Scalar(double x) {
  ParamSet p;
  p.Add("x", {1});
  p[0].values[0] = x;
  return p;
}

OracleCorpus TinyCorpus(std::size_t speakers = 2, std::size_t components = 2) {
  OracleSpec spec;
  spec.vocab = 4;
  spec.speakers = speakers;
  spec.components = components;
  spec.dim = 2;
  spec.min_length = 3;
  spec.max_length = 6;
  spec.num_train = 24;
  spec.num_test = 6;
  spec.seed = 17;
  return GenCorpus(spec);
}

TrainConfig TinyTrainConfig() {
  TrainConfig c;
  c.model.num_components = 2;
  c.model.hidden = 6;
  c.model.recurrent = 6;
  c.epochs = 4;
  c.batch_size = 5;
  c.warmup_steps = 3;
  c.seed = 4;
  return c;
}

TEST_CASE("adam: zero gradient leaves parameters and decays moments") {
  ParamSet p = Scalar(1.5);
  AdamMoments mom = ZeroMoments(p);
  mom.m[0].values[0] = 0.2;
  mom.v[0].values[0] = 0.4;
  AdamStep(p, Scalar(0.0), mom, 3, AdamHyper{});
  CHECK(mom.m[0].values[0] == doctest::Approx(0.2 * 0.9).epsilon(1e-15));
  CHECK(mom.v[0].values[0] == doctest::Approx(0.4 * 0.999).epsilon(1e-15));

  ParamSet q = Scalar(1.5);
  AdamMoments fresh = ZeroMoments(q);
  AdamStep(q, Scalar(0.0), fresh, 1, AdamHyper{});
  CHECK(q[0].values[0] == 1.5);
}

TEST_CASE("adam: constant gradient gives lr-sized monotone steps") {
  ParamSet p = Scalar(0.0);
  AdamMoments mom = ZeroMoments(p);
  const AdamHyper hyper{0.01};
  double prev = 0.0;
  for (std::uint64_t t = 1; t <= 200; ++t) {
    AdamStep(p, Scalar(2.5), mom, t, hyper);
    const double step = prev - p[0].values[0];
    // Bias-corrected m / sqrt(v) equals g / |g| for a constant g.
    CHECK(step == doctest::Approx(0.01 * 2.5 / (2.5 + 1e-8)).epsilon(1e-9));
    prev = p[0].values[0];
  }
}

TEST_CASE("adam: scalar quadratic converges to its minimizer") {
  // f(x) = 0.5 * (x - 3)^2, minimizer 3.
  ParamSet p = Scalar(-2.0);
  AdamMoments mom = ZeroMoments(p);
  const AdamHyper hyper{1e-2};
  for (std::uint64_t t = 1; t <= 5000; ++t) AdamStep(p, Scalar(p[0].values[0] - 3.0), mom, t, hyper);
  CHECK(std::abs(p[0].values[0] - 3.0) < 1e-6);
}

TEST_CASE("adam: non-finite gradient aborts without modifying anything") {
  ParamSet p = Scalar(1.0);
  AdamMoments mom = ZeroMoments(p);
  try {
    AdamStep(p, Scalar(NAN), mom, 1, AdamHyper{});
    FAIL("expected NumericalError");
  } catch (const NumericalError &e) {
    CHECK(std::string(e.what()).find("x[0]") != std::string::npos);
  }
  CHECK(p[0].values[0] == 1.0);
  CHECK(mom.m[0].values[0] == 0.0);
  CHECK_THROWS_AS(AdamStep(p, Scalar(1.0), mom, 0, AdamHyper{}), InvalidParameterError);
}

TEST_CASE("train config: warmup schedule and strict json") {
  TrainConfig c;
  c.learning_rate = 0.02;
  c.warmup_steps = 4;
  CHECK(c.LearningRate(1) == doctest::Approx(0.005));
  CHECK(c.LearningRate(4) == 0.02);
  CHECK(c.LearningRate(100) == 0.02);
  c.warmup_steps = 0;
  CHECK(c.LearningRate(1) == 0.02);

  CHECK_THROWS_AS(TrainConfigFromJson(Json::parse(R"({"epoch":3})")), ConfigError);
  CHECK_THROWS_AS(TrainConfigFromJson(Json::parse(R"({"model":{"components":3}})")),
                  ConfigError);
  CHECK_THROWS_AS(TrainConfigFromJson(Json::parse(R"({"epochs":0})")), ConfigError);
  const TrainConfig parsed = TrainConfigFromJson(
      Json::parse(R"({"epochs":7,"model":{"num_components":3,"multi_speaker":false}})"));
  CHECK(parsed.epochs == 7);
  CHECK(parsed.model.num_components == 3);
  CHECK(TrainConfigFromJson(TrainConfigToJson(parsed)) == parsed);
}

TEST_CASE("model settings: speaker mode follows the corpus unless forced") {
  ModelSettings m;
  CHECK(m.Resolve(5, 2, 1).speakers == 0);
  CHECK(m.Resolve(5, 2, 3).speakers == 3);
  m.multi_speaker = true;
  CHECK(m.Resolve(5, 2, 1).speakers == 1);
}

TEST_CASE("train: same seed reproduces history and parameters bit-exactly") {
  const OracleCorpus data = TinyCorpus();
  const TrainConfig tc = TinyTrainConfig();
  const PredictorConfig model = tc.model.Resolve(4, 2, 2);
  const TrainState a = Train(data.train, data.test, model, tc, 1);
  const TrainState b = Train(data.train, data.test, model, tc, 3);
  CHECK(a.history == b.history);
  CHECK(a.params == b.params);
  CHECK(a.history.size() == 4);
  CHECK(a.step == 4 * 5);   // ceil(24 / 5) updates per epoch
  CHECK(a.history.back().train_nll < a.history.front().train_nll + 0.5);
}

TEST_CASE("train: checkpoint save, load and continue matches an uninterrupted run") {
  const OracleCorpus data = TinyCorpus();
  TrainConfig tc = TinyTrainConfig();
  const PredictorConfig model = tc.model.Resolve(4, 2, 2);
  const TrainState full = Train(data.train, data.test, model, tc, 1);

  tc.epochs = 2;
  const TrainState half = Train(data.train, data.test, model, tc, 1);
  const auto path = std::filesystem::temp_directory_path() / "prosody_resume_ckpt.json";
  SaveCheckpoint(path, FromTrainState(half, tc));
  Checkpoint loaded = LoadCheckpoint(path);
  std::filesystem::remove(path);
  REQUIRE(loaded.train_state);
  tc.epochs = 4;
  const TrainState resumed =
      Train(data.train, data.test, model, tc, 2, std::move(*loaded.train_state));
  CHECK(resumed.params == full.params);
  CHECK(resumed.history == full.history);
  CHECK(resumed.moments == full.moments);
  CHECK(resumed.step == full.step);
}

TEST_CASE("train: resume on another corpus is refused") {
  const OracleCorpus data = TinyCorpus();
  TrainConfig tc = TinyTrainConfig();
  tc.epochs = 1;
  const PredictorConfig model = tc.model.Resolve(4, 2, 2);
  TrainState s = Train(data.train, data.test, model, tc, 1);
  Corpus other = data.train;
  other.pop_back();
  tc.epochs = 2;
  CHECK_THROWS_AS(Train(other, data.test, model, tc, 1, s), ConfigError);
}

TEST_CASE("train: divergence aborts with a report") {
  const OracleCorpus data = TinyCorpus();
  TrainConfig tc = TinyTrainConfig();
  tc.divergence_threshold = 1e-3;
  const PredictorConfig model = tc.model.Resolve(4, 2, 2);
  try {
    Train(data.train, data.test, model, tc, 1);
    FAIL("expected NumericalError");
  } catch (const NumericalError &e) {
    CHECK(std::string(e.what()).find("diverged at epoch 1") != std::string::npos);
  }
}

TEST_CASE("train: single Gaussian on single-component data approaches the oracle") {
  OracleSpec spec;
  spec.vocab = 3;
  spec.components = 1;
  spec.dim = 2;
  spec.num_train = 300;
  spec.num_test = 100;
  spec.seed = 2;
  const OracleCorpus data = GenCorpus(spec);
  TrainConfig tc;
  tc.model.num_components = 1;
  tc.model.hidden = 8;
  tc.model.recurrent = 8;
  tc.epochs = 60;
  tc.batch_size = 16;
  tc.learning_rate = 0.01;
  tc.seed = 3;
  const PredictorConfig model = tc.model.Resolve(3, 2, 1);
  const TrainState s = Train(data.train, data.test, model, tc, 1);
  const double oracle_nll = -OracleMeanLoglikPerPhone(data.oracle, data.test);
  MESSAGE("model test NLL " << s.history.back().test_nll << " oracle " << oracle_nll);
  CHECK(std::abs(s.history.back().test_nll - oracle_nll) / 2.0 < 0.1);
}

TEST_CASE("grad_check: analytic against itself has zero error") {
  const OracleCorpus data = TinyCorpus();
  const PredictorParams params =
      PredictorParams::Initialize(TinyTrainConfig().model.Resolve(4, 2, 2), 1);
  const SequenceLossResult r = BatchNll(params, Corpus(data.train.begin(), data.train.begin() + 2));
  const GradCheckReport rep = CompareGradients(r.grads, r.grads, 1e-3, 1e-12);
  CHECK(rep.pass);
  CHECK(rep.max_rel_error == 0.0);
}

TEST_CASE("grad_check: default desk config passes at 1e-3") {
  const GradCheckReport rep = RunGradCheck(GradCheckConfig{}, 1);
  CHECK(rep.pass);
  CHECK(rep.max_rel_error < 1e-3);
  CHECK(rep.arrays.size() == 13);
}

TEST_CASE("grad_check: a 1% corruption of one head gradient is flagged") {
  const OracleCorpus data = TinyCorpus();
  const PredictorParams params =
      PredictorParams::Initialize(TinyTrainConfig().model.Resolve(4, 2, 2), 1);
  const Corpus batch(data.train.begin(), data.train.begin() + 2);
  SequenceLossResult r = BatchNll(params, batch);
  const ParamSet numeric = NumericGradient(params, batch, 1e-5);
  const std::size_t target = r.grads.IndexOf("sd_head_w");
  for (double &g : r.grads[target].values) g *= 1.01;
  const GradCheckReport rep =
      CompareGradients(r.grads, numeric, 1e-3, 1e-7 * std::max(1.0, r.loss));
  CHECK_FALSE(rep.pass);
  for (const ArrayCheck &a : rep.arrays) CHECK(a.pass == (a.name != "sd_head_w"));
}

TEST_CASE("history csv: header and exact values") {
  const std::string csv = HistoryCsv({{1, 2.5, 3.25, 0.001}});
  CHECK(csv == "epoch,train_nll,test_nll,lr\n1,2.5,3.25,0.001\n");
}

}  // namespace
}  // namespace prosody

namespace prosody {
namespace {

TEST_CASE("fit_embedding_norm: mean and population standard deviation") {
  Corpus corpus(2);
  corpus[0].embeddings = {{1.0, 5.0}, {3.0, 5.0}};
  corpus[1].embeddings = {{5.0, 5.0}};
  const EmbeddingNorm n = FitEmbeddingNorm(corpus);
  CHECK(n.shift[0] == doctest::Approx(3.0));
  CHECK(n.scale[0] == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(n.shift[1] == doctest::Approx(5.0));
  CHECK(n.scale[1] == 1.0);
  CHECK_THROWS_AS(FitEmbeddingNorm(Corpus{}), ConfigError);
}

}  // namespace
}  // namespace prosody
