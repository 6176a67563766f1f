// include/prosody/training.h

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

#ifndef PROSODY_TRAINING_H_
#define PROSODY_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "prosody/io.h"
#include "prosody/params.h"
#include "prosody/predictor.h"
#include "prosody/synthdata.h"

namespace prosody {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const AdamHyper &) const = default;
};

/// First and second moment estimates, laid out like the parameters.
struct AdamMoments {
  ParamSet m;
  ParamSet v;
  bool operator==(const AdamMoments &) const = default;
};

AdamMoments ZeroMoments(const ParamSet &params);

/// One bias-corrected Adam update at step t (1-based). Throws
/// NumericalError naming the array and element of a non-finite gradient
/// before anything is modified.
void AdamStep(ParamSet &params, const ParamSet &grads, AdamMoments &moments,
              std::uint64_t t, const AdamHyper &hyper);

/// Model shape chosen by the user; vocabulary, dimension and speaker count
/// come from the corpus.
struct ModelSettings {
  std::size_t num_components = 5;
  std::size_t hidden = 16;
  std::size_t recurrent = 16;
  CellType cell = CellType::kElman;
  LogVarClamp clamp;
  // Unset: multi-speaker mode iff the corpus has more than one speaker.
  std::optional<bool> multi_speaker;
  // Standardize embeddings per dimension with training-corpus statistics.
  bool normalize_embeddings = true;
  bool operator==(const ModelSettings &) const = default;

  PredictorConfig Resolve(std::size_t vocab, std::size_t dim, std::size_t speakers) const;
};

struct TrainConfig {
  ModelSettings model;
  std::size_t epochs = 40;
  std::size_t batch_size = 16;           // utterances per update
  double learning_rate = 3e-3;
  std::size_t warmup_steps = 100;        // linear ramp, then constant
  double clip_norm = 5.0;                // global gradient norm
  double beta = 0.02;                    // stored only; the loss is not scaled
  std::uint64_t seed = 1;
  double divergence_threshold = 1e6;     // mean NLL per phone
  double monotonic_margin = 0.05;        // warning slack on train NLL
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool operator==(const TrainConfig &) const = default;

  void Validate() const;
  /// Learning rate for the 1-based update `step`.
  double LearningRate(std::uint64_t step) const;
};

TrainConfig TrainConfigFromJson(const Json &j);
Json TrainConfigToJson(const TrainConfig &c);

struct EpochRecord {
  std::size_t epoch = 0;      // 1-based
  double train_nll = 0.0;     // mean NLL per phone after the epoch
  double test_nll = 0.0;
  double lr = 0.0;            // learning rate of the epoch's last update
  bool operator==(const EpochRecord &) const = default;
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  PredictorParams params;
  AdamMoments moments;
  std::uint64_t step = 0;
  std::size_t epochs_done = 0;
  std::vector<EpochRecord> history;
  std::string corpus_fingerprint;   // of the training split
  std::vector<std::string> warnings;
};

/// Per-dimension mean and standard deviation of all embeddings in the
/// corpus. Dimensions with zero spread get scale 1.
EmbeddingNorm FitEmbeddingNorm(const Corpus &corpus);

/// Model config for a corpus: Resolve() on its vocabulary, dimension and
/// speaker count, plus normalization fitted on the training split when
/// enabled.
PredictorConfig ResolveForCorpus(const ModelSettings &settings, const OracleCorpus &corpus);

/// Observer called after every epoch, e.g. for progress logging.
using EpochCallback = std::function<void(const EpochRecord &)>;

/// Trains until config.epochs epochs are done. Starts from `resume` when
/// given (whose fingerprint must match `train`), otherwise from a fresh
/// initialization seeded by config.seed. The result depends only on the
/// corpus, the config and the resume state, never on `threads`.
TrainState Train(const Corpus &train, const Corpus &test, const PredictorConfig &model,
                 const TrainConfig &config, std::size_t threads,
                 std::optional<TrainState> resume = std::nullopt,
                 const EpochCallback &on_epoch = {});

/// Speaker argument for an utterance under the model's mode.
SpeakerRef ModelSpeaker(const PredictorConfig &config, const Utterance &u);

/// Mean NLL per phone of the corpus under teacher forcing.
double MeanNllPerPhone(const PredictorParams &params, const Corpus &corpus,
                       std::size_t threads);

/// Sum of sequence NLLs over a batch and the summed gradient.
SequenceLossResult BatchNll(const PredictorParams &params, const Corpus &batch);

struct ArrayCheck {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<ArrayCheck> arrays;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  double loss = 0.0;
  bool pass = true;
};

/// Elementwise |a - n| / max(|a|, |n|, floor), worst per array.
GradCheckReport CompareGradients(const ParamSet &analytic, const ParamSet &numeric,
                                 double tolerance, double floor);

/// Central differences of BatchNll for every parameter.
ParamSet NumericGradient(const PredictorParams &params, const Corpus &batch, double h);

/// BPTT gradients against central differences (step h). The comparison
/// floor is 1e-7 * max(1, |loss|), roughly where the difference quotient
/// stops resolving the gradient in 64-bit arithmetic.
GradCheckReport GradCheck(const PredictorParams &params, const Corpus &batch,
                          double tolerance, double h = 1e-5);

/// Settings of the stand-alone gradient check run by the CLI.
struct GradCheckConfig {
  std::size_t num_components = 2;
  std::size_t dim = 2;
  std::size_t hidden = 8;
  std::size_t recurrent = 8;
  std::size_t vocab = 5;
  std::size_t speakers = 2;          // 0 selects single-speaker mode
  std::size_t length = 3;            // K
  std::size_t batch = 2;             // utterances
  double param_scale = 0.5;          // parameters drawn from U(-s, s)
  double tolerance = 1e-3;
  double step = 1e-5;
  bool operator==(const GradCheckConfig &) const = default;
};

GradCheckConfig GradCheckConfigFromJson(const Json &j);

/// Draws parameters and a random batch from `seed` and runs GradCheck.
GradCheckReport RunGradCheck(const GradCheckConfig &config, std::uint64_t seed);

std::string HistoryCsv(const std::vector<EpochRecord> &history);
std::string FormatDouble(double x);

}  // namespace prosody

#endif  // PROSODY_TRAINING_H_
