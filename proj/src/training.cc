// src/training.cc

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

#include "prosody/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "prosody/error.h"
#include "prosody/parallel.h"
#include "prosody/rng.h"

namespace prosody {
namespace {

constexpr std::uint64_t kShuffleStream = 3;

Json ModelSettingsToJson(const ModelSettings &m) {
  Json j{{"num_components", m.num_components},
         {"hidden", m.hidden},
         {"recurrent", m.recurrent},
         {"cell", CellTypeName(m.cell)},
         {"logvar_min", m.clamp.min},
         {"logvar_max", m.clamp.max},
         {"normalize_embeddings", m.normalize_embeddings}};
  if (m.multi_speaker) j["multi_speaker"] = *m.multi_speaker;
  return j;
}

ModelSettings ModelSettingsFromJson(const Json &j) {
  const std::string ctx = "train config.model";
  RejectUnknownKeys(j, {"num_components", "hidden", "recurrent", "cell", "logvar_min",
                        "logvar_max", "multi_speaker", "normalize_embeddings"},
                    ctx);
  ModelSettings m;
  ReadField(j, "num_components", m.num_components, ctx);
  ReadField(j, "hidden", m.hidden, ctx);
  ReadField(j, "recurrent", m.recurrent, ctx);
  ReadField(j, "logvar_min", m.clamp.min, ctx);
  ReadField(j, "logvar_max", m.clamp.max, ctx);
  ReadField(j, "normalize_embeddings", m.normalize_embeddings, ctx);
  if (j.contains("cell")) {
    std::string cell;
    ReadField(j, "cell", cell, ctx);
    m.cell = ParseCellType(cell);
  }
  if (j.contains("multi_speaker") && !j["multi_speaker"].is_null()) {
    bool multi = false;
    ReadField(j, "multi_speaker", multi, ctx);
    m.multi_speaker = multi;
  }
  return m;
}

}  // namespace

AdamMoments ZeroMoments(const ParamSet &params) {
  return {params.ZerosLike(), params.ZerosLike()};
}

void AdamStep(ParamSet &params, const ParamSet &grads, AdamMoments &moments,
              std::uint64_t t, const AdamHyper &hyper) {
  if (t == 0) throw InvalidParameterError("adam: step count must start at 1");
  if (!params.SameLayout(grads) || !params.SameLayout(moments.m) ||
      !params.SameLayout(moments.v))
    throw ShapeError("adam: parameter, gradient and moment layouts differ");
  for (std::size_t a = 0; a < grads.size(); ++a) {
    const ParamArray &g = grads[a];
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!std::isfinite(g.values[i]))
        throw NumericalError("adam: non-finite gradient " + FormatDouble(g.values[i]) +
                             " in " + g.name + "[" + std::to_string(i) + "] at step " +
                             std::to_string(t));
  }
  const double td = static_cast<double>(t);
  const double c1 = 1.0 - std::pow(hyper.beta1, td);
  const double c2 = 1.0 - std::pow(hyper.beta2, td);
  for (std::size_t a = 0; a < params.size(); ++a) {
    auto &p = params[a].values;
    auto &m = moments.m[a].values;
    auto &v = moments.v[a].values;
    const auto &g = grads[a].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      p[i] -= hyper.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + hyper.epsilon);
    }
  }
}

PredictorConfig ModelSettings::Resolve(std::size_t vocab, std::size_t dim,
                                       std::size_t speakers) const {
  PredictorConfig c;
  c.num_components = num_components;
  c.dim = dim;
  c.hidden = hidden;
  c.recurrent = recurrent;
  c.vocab = vocab;
  c.cell = cell;
  c.clamp = clamp;
  const bool multi = multi_speaker.value_or(speakers > 1);
  c.speakers = multi ? speakers : 0;
  c.Validate();
  return c;
}

void TrainConfig::Validate() const {
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train: learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("train: clip_norm must be positive");
  if (!(divergence_threshold > 0.0))
    throw ConfigError("train: divergence_threshold must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("train: adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("train: adam_epsilon must be positive");
}

double TrainConfig::LearningRate(std::uint64_t step) const {
  if (warmup_steps == 0 || step >= warmup_steps) return learning_rate;
  return learning_rate * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

TrainConfig TrainConfigFromJson(const Json &j) {
  const std::string ctx = "train config";
  RejectUnknownKeys(j, {"model", "epochs", "batch_size", "learning_rate", "warmup_steps",
                        "clip_norm", "beta", "seed", "divergence_threshold",
                        "monotonic_margin", "adam_beta1", "adam_beta2", "adam_epsilon"},
                    ctx);
  TrainConfig c;
  if (j.contains("model")) c.model = ModelSettingsFromJson(j["model"]);
  ReadField(j, "epochs", c.epochs, ctx);
  ReadField(j, "batch_size", c.batch_size, ctx);
  ReadField(j, "learning_rate", c.learning_rate, ctx);
  ReadField(j, "warmup_steps", c.warmup_steps, ctx);
  ReadField(j, "clip_norm", c.clip_norm, ctx);
  ReadField(j, "beta", c.beta, ctx);
  ReadField(j, "seed", c.seed, ctx);
  ReadField(j, "divergence_threshold", c.divergence_threshold, ctx);
  ReadField(j, "monotonic_margin", c.monotonic_margin, ctx);
  ReadField(j, "adam_beta1", c.adam_beta1, ctx);
  ReadField(j, "adam_beta2", c.adam_beta2, ctx);
  ReadField(j, "adam_epsilon", c.adam_epsilon, ctx);
  c.Validate();
  return c;
}

Json TrainConfigToJson(const TrainConfig &c) {
  return Json{{"model", ModelSettingsToJson(c.model)},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"warmup_steps", c.warmup_steps},
              {"clip_norm", c.clip_norm},
              {"beta", c.beta},
              {"seed", c.seed},
              {"divergence_threshold", c.divergence_threshold},
              {"monotonic_margin", c.monotonic_margin},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_epsilon", c.adam_epsilon}};
}

EmbeddingNorm FitEmbeddingNorm(const Corpus &corpus) {
  EmbeddingNorm norm;
  std::size_t n = 0;
  for (const Utterance &u : corpus) {
    for (const Embedding &e : u.embeddings) {
      if (norm.shift.empty()) {
        norm.shift.assign(e.size(), 0.0);
        norm.scale.assign(e.size(), 0.0);
      }
      if (e.size() != norm.shift.size()) throw ShapeError("corpus mixes embedding dimensions");
      ++n;
      // Welford update; scale holds the running sum of squared deviations.
      for (std::size_t d = 0; d < e.size(); ++d) {
        const double delta = e[d] - norm.shift[d];
        norm.shift[d] += delta / static_cast<double>(n);
        norm.scale[d] += delta * (e[d] - norm.shift[d]);
      }
    }
  }
  if (n == 0) throw ConfigError("cannot fit embedding normalization on an empty corpus");
  for (double &s : norm.scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  return norm;
}

PredictorConfig ResolveForCorpus(const ModelSettings &settings, const OracleCorpus &corpus) {
  const OracleSpec &spec = corpus.oracle.spec;
  PredictorConfig config = settings.Resolve(spec.vocab, spec.dim, spec.speakers);
  if (settings.normalize_embeddings) {
    config.norm = FitEmbeddingNorm(corpus.train);
    config.Validate();
  }
  return config;
}

SpeakerRef ModelSpeaker(const PredictorConfig &config, const Utterance &u) {
  return config.MultiSpeaker() ? SpeakerRef(u.speaker) : std::nullopt;
}

double MeanNllPerPhone(const PredictorParams &params, const Corpus &corpus,
                       std::size_t threads) {
  std::vector<double> losses(corpus.size());
  ParallelFor(corpus.size(), threads, [&](std::size_t i) {
    const Utterance &u = corpus[i];
    losses[i] = SequenceLoss(u.phones, ModelSpeaker(params.config(), u), u.embeddings, params);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(std::max<std::size_t>(1, CountPhones(corpus)));
}

SequenceLossResult BatchNll(const PredictorParams &params, const Corpus &batch) {
  SequenceLossResult total{0.0, params.arrays().ZerosLike()};
  for (const Utterance &u : batch) {
    SequenceLossResult r =
        SequenceNll(u.phones, ModelSpeaker(params.config(), u), u.embeddings, params);
    total.loss += r.loss;
    total.grads.Axpy(1.0, r.grads);
  }
  return total;
}

TrainState Train(const Corpus &train, const Corpus &test, const PredictorConfig &model,
                 const TrainConfig &config, std::size_t threads,
                 std::optional<TrainState> resume, const EpochCallback &on_epoch) {
  config.Validate();
  model.Validate();
  if (train.empty()) throw ConfigError("train: training corpus is empty");
  CheckCorpusForModel(train, model);
  CheckCorpusForModel(test, model);
  const std::string fingerprint = CorpusFingerprint(train);

  TrainState state = resume ? std::move(*resume)
                            : TrainState{PredictorParams::Initialize(model, config.seed),
                                         {}, 0, 0, {}, fingerprint, {}};
  if (!resume) state.moments = ZeroMoments(state.params.arrays());
  if (!(state.params.config() == model))
    throw ConfigError("train: resume checkpoint was trained with a different model config");
  if (state.corpus_fingerprint != fingerprint)
    throw ConfigError("train: resume checkpoint was trained on a different corpus (" +
                      state.corpus_fingerprint + " vs " + fingerprint + ")");

  AdamHyper hyper{config.learning_rate, config.adam_beta1, config.adam_beta2,
                  config.adam_epsilon};
  std::vector<std::size_t> order(train.size());
  std::vector<SequenceLossResult> slots;

  for (std::size_t epoch = state.epochs_done + 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomSource shuffle = RandomSource::Derive(config.seed, kShuffleStream, epoch);
    std::shuffle(order.begin(), order.end(), shuffle.engine());

    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + config.batch_size);
      slots.assign(hi - lo, {});
      ParallelFor(hi - lo, threads, [&](std::size_t i) {
        const Utterance &u = train[order[lo + i]];
        slots[i] = SequenceNll(u.phones, ModelSpeaker(model, u), u.embeddings, state.params);
      });
      double loss = 0.0;
      std::size_t phones = 0;
      ParamSet grads = state.params.arrays().ZerosLike();
      for (std::size_t i = 0; i < slots.size(); ++i) {
        loss += slots[i].loss;
        grads.Axpy(1.0, slots[i].grads);
        phones += train[order[lo + i]].phones.size();
      }
      const double batch_nll = loss / static_cast<double>(phones);
      if (!std::isfinite(batch_nll) || batch_nll > config.divergence_threshold)
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(state.step + 1) +
                             ": batch NLL per phone " + FormatDouble(batch_nll) +
                             " exceeds " + FormatDouble(config.divergence_threshold));
      grads.Scale(1.0 / static_cast<double>(phones));
      const double norm = std::sqrt(grads.SquaredNorm());
      if (norm > config.clip_norm) grads.Scale(config.clip_norm / norm);
      ++state.step;
      hyper.lr = config.LearningRate(state.step);
      AdamStep(state.params.arrays(), grads, state.moments, state.step, hyper);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_nll = MeanNllPerPhone(state.params, train, threads);
    rec.test_nll = test.empty() ? 0.0 : MeanNllPerPhone(state.params, test, threads);
    rec.lr = hyper.lr;
    if (!std::isfinite(rec.train_nll) || rec.train_nll > config.divergence_threshold)
      throw NumericalError("training diverged after epoch " + std::to_string(epoch) +
                           ": train NLL per phone " + FormatDouble(rec.train_nll));
    if (!state.history.empty() &&
        rec.train_nll > state.history.back().train_nll + config.monotonic_margin)
      state.warnings.push_back("epoch " + std::to_string(epoch) + ": train NLL rose from " +
                               FormatDouble(state.history.back().train_nll) + " to " +
                               FormatDouble(rec.train_nll));
    state.history.push_back(rec);
    state.epochs_done = epoch;
    if (on_epoch) on_epoch(rec);
  }
  return state;
}

GradCheckReport CompareGradients(const ParamSet &analytic, const ParamSet &numeric,
                                 double tolerance, double floor) {
  if (!analytic.SameLayout(numeric)) throw ShapeError("gradcheck: layouts differ");
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t a = 0; a < analytic.size(); ++a) {
    ArrayCheck check;
    check.name = analytic[a].name;
    check.size = analytic[a].size();
    for (std::size_t i = 0; i < check.size; ++i) {
      const double x = analytic[a].values[i], y = numeric[a].values[i];
      const double err =
          std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor});
      if (!(err <= check.max_rel_error)) {
        check.max_rel_error = std::isnan(err) ? INFINITY : err;
        check.worst_index = i;
      }
    }
    check.pass = check.max_rel_error < tolerance;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.pass = report.pass && check.pass;
    report.arrays.push_back(check);
  }
  return report;
}

ParamSet NumericGradient(const PredictorParams &params, const Corpus &batch, double h) {
  PredictorParams work = params;
  ParamSet out = params.arrays().ZerosLike();
  auto batch_loss = [&] {
    double total = 0.0;
    for (const Utterance &u : batch)
      total += SequenceLoss(u.phones, ModelSpeaker(work.config(), u), u.embeddings, work);
    return total;
  };
  for (std::size_t a = 0; a < out.size(); ++a) {
    for (std::size_t i = 0; i < out[a].size(); ++i) {
      double &x = work.arrays()[a].values[i];
      const double orig = x;
      x = orig + h;
      const double up = batch_loss();
      x = orig - h;
      const double down = batch_loss();
      x = orig;
      out[a].values[i] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

GradCheckReport GradCheck(const PredictorParams &params, const Corpus &batch,
                          double tolerance, double h) {
  const SequenceLossResult analytic = BatchNll(params, batch);
  const ParamSet numeric = NumericGradient(params, batch, h);
  GradCheckReport report = CompareGradients(analytic.grads, numeric, tolerance,
                                            1e-7 * std::max(1.0, std::abs(analytic.loss)));
  report.loss = analytic.loss;
  return report;
}

GradCheckConfig GradCheckConfigFromJson(const Json &j) {
  const std::string ctx = "gradcheck config";
  RejectUnknownKeys(j, {"num_components", "dim", "hidden", "recurrent", "vocab", "speakers",
                        "length", "batch", "param_scale", "tolerance", "step"},
                    ctx);
  GradCheckConfig c;
  ReadField(j, "num_components", c.num_components, ctx);
  ReadField(j, "dim", c.dim, ctx);
  ReadField(j, "hidden", c.hidden, ctx);
  ReadField(j, "recurrent", c.recurrent, ctx);
  ReadField(j, "vocab", c.vocab, ctx);
  ReadField(j, "speakers", c.speakers, ctx);
  ReadField(j, "length", c.length, ctx);
  ReadField(j, "batch", c.batch, ctx);
  ReadField(j, "param_scale", c.param_scale, ctx);
  ReadField(j, "tolerance", c.tolerance, ctx);
  ReadField(j, "step", c.step, ctx);
  if (c.length == 0 || c.batch == 0) throw ConfigError(ctx + ": length and batch must be >= 1");
  if (!(c.step > 0.0) || !(c.tolerance > 0.0) || !(c.param_scale >= 0.0))
    throw ConfigError(ctx + ": step, tolerance must be positive and param_scale >= 0");
  return c;
}

GradCheckReport RunGradCheck(const GradCheckConfig &gc, std::uint64_t seed) {
  PredictorConfig config;
  config.num_components = gc.num_components;
  config.dim = gc.dim;
  config.hidden = gc.hidden;
  config.recurrent = gc.recurrent;
  config.vocab = gc.vocab;
  config.speakers = gc.speakers;
  config.Validate();
  PredictorParams params(config);
  RandomSource rng(seed);
  for (ParamArray &a : params.arrays())
    for (double &x : a.values) x = rng.Uniform(-gc.param_scale, gc.param_scale);
  Corpus batch(gc.batch);
  for (Utterance &u : batch) {
    u.speaker = config.MultiSpeaker() ? rng.UniformIndex(config.speakers) : 0;
    for (std::size_t k = 0; k < gc.length; ++k) {
      u.phones.push_back(rng.UniformIndex(config.vocab));
      Embedding e(config.dim);
      for (double &x : e) x = rng.Gaussian();
      u.embeddings.push_back(std::move(e));
    }
  }
  return GradCheck(params, batch, gc.tolerance, gc.step);
}

std::string FormatDouble(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string HistoryCsv(const std::vector<EpochRecord> &history) {
  std::string out = "epoch,train_nll,test_nll,lr\n";
  for (const EpochRecord &r : history)
    out += std::to_string(r.epoch) + "," + FormatDouble(r.train_nll) + "," +
           FormatDouble(r.test_nll) + "," + FormatDouble(r.lr) + "\n";
  return out;
}

}  // namespace prosody
