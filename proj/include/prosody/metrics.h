// include/prosody/metrics.h

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

#ifndef PROSODY_METRICS_H_
#define PROSODY_METRICS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prosody/io.h"
#include "prosody/predictor.h"
#include "prosody/synthdata.h"
#include "prosody/training.h"

namespace prosody {

/// One training run entering the log-likelihood-vs-components table.
struct LlRun {
  std::size_t num_components = 0;
  std::vector<EpochRecord> history;
  std::string corpus_fingerprint;
};

struct LlCurveRow {
  std::size_t num_components = 0;
  double train_ll = 0.0;   // final epoch, mean per phone
  double test_ll = 0.0;
  double gap = 0.0;        // |train_ll - test_ll|
};

struct LlCurves {
  std::vector<LlCurveRow> rows;   // ascending num_components
  bool test_ll_increases = false; // strictly increasing along rows
  bool gap_shrinks = false;       // every M > 1 gap below the M = 1 gap
  std::string csv;                // num_components,epoch,train_ll,test_ll
};

/// Throws ConfigError if runs were trained on different corpora or have no
/// history.
LlCurves ComputeLlCurves(std::vector<LlRun> runs);

inline constexpr double kDefaultThresholdValues[] = {0.1, 0.01};
inline constexpr std::span<const double> kDefaultThresholds{kDefaultThresholdValues};

/// Mean over phones of |{i : w_i > t}| for every threshold t.
std::vector<double> ActiveComponentsFromWeights(std::span<const Vector> weights,
                                                std::span<const double> thresholds);

/// Same statistic on the model's teacher-forced mixtures over a corpus.
std::vector<double> ActiveComponents(const PredictorParams &params, const Corpus &corpus,
                                     std::span<const double> thresholds = kDefaultThresholds);

/// Average over sample pairs of the mean per-phone Euclidean distance
/// between n_samples free-running samples. n_samples < 2 is a ConfigError.
double Diversity(const PredictorParams &params, std::span<const std::size_t> phones,
                 SpeakerRef speaker, std::size_t n_samples, std::uint64_t seed);

/// Diversity averaged over the utterances of a corpus, each with its own
/// derived seed and the speaker implied by the model's mode.
double CorpusDiversity(const PredictorParams &params, const Corpus &corpus,
                       std::size_t n_samples, std::uint64_t seed, std::size_t threads = 1);

/// Pearson correlation; NaN when either sequence is constant.
double Pearson(std::span<const double> x, std::span<const double> y);

struct CloningReport {
  std::size_t utterances = 0;
  std::size_t phones = 0;
  double component_accuracy = 0.0;
  double random_accuracy = 0.0;     // uniform random index baseline
  double majority_accuracy = 0.0;   // always the phone's most frequent label
  double mean_correlation = 0.0;    // cloned vs oracle target means
  double random_correlation = 0.0;  // clone of random indices
  double sampled_correlation = 0.0; // free sampling for the target speaker
  double affinity_margin = 0.0;     // per phone, log p_tgt - log p_src
  double sampled_affinity_margin = 0.0;
};

/// Model component indices are arbitrary labels. Accuracy maps each
/// (phone, model component) to the latent label it co-occurs with most
/// often on `align` under identification. Source utterances are the
/// `eval` records spoken by `src_speaker`. Throws EvalError when latent
/// labels are missing.
CloningReport ComputeCloningReport(const Oracle &oracle, const Corpus &align,
                                   const Corpus &eval, const PredictorParams &params,
                                   std::size_t src_speaker, std::size_t tgt_speaker,
                                   std::uint64_t seed);

Json CloningReportToJson(const CloningReport &r);

}  // namespace prosody

#endif  // PROSODY_METRICS_H_
