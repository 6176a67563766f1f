// include/prosody/synthdata.h

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

#ifndef PROSODY_SYNTHDATA_H_
#define PROSODY_SYNTHDATA_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prosody/gmm.h"
#include "prosody/io.h"
#include "prosody/predictor.h"

namespace prosody {

/// Per-speaker diagonal affine map applied to every component:
/// mean -> scale * mean + shift, variance -> scale^2 * variance.
struct SpeakerMap {
  Vector scale;
  Vector shift;
  bool operator==(const SpeakerMap &) const = default;
};

/// Generator settings for the ground-truth corpus.
struct OracleSpec {
  std::size_t vocab = 10;         // V
  std::size_t speakers = 1;       // S
  std::size_t components = 5;     // M*
  std::size_t dim = 4;            // D
  double separation = 6.0;        // minimum distance between component means, in std units
  std::size_t min_length = 5;
  std::size_t max_length = 15;
  std::size_t num_train = 2000;
  std::size_t num_test = 200;
  std::uint64_t seed = 1;
  // Means are drawn in [-w, w]^D; unset picks w from M*, D and separation.
  std::optional<double> box_half_width;
  // Per-phone offset of the mixture centroid, uniform in [-c, c]^D.
  double phone_center_spread = 0.0;
  // Explicit maps, one per speaker. Unset: speaker 0 is the identity and
  // the others draw scale ~ U(0.7, 1.4), |shift| ~ U(0.5, 1) * separation.
  std::optional<std::vector<SpeakerMap>> speaker_maps;

  void Validate() const;
  double BoxHalfWidth() const;
  bool operator==(const OracleSpec &) const = default;
};

/// The generating mixtures: speaker-independent means with unit variances
/// per phone, per-phone weights and per-speaker maps.
struct Oracle {
  OracleSpec spec;
  std::vector<Matrix> means;      // [V] of M* x D
  std::vector<Vector> weights;    // [V] of M*
  std::vector<SpeakerMap> speaker_maps;

  /// Mixture of `phone` as produced by `speaker`.
  DiagGmm SpeakerGmm(std::size_t phone, std::size_t speaker) const;
  /// Mean of component `j` of `phone` as produced by `speaker`.
  Embedding SpeakerMean(std::size_t phone, std::size_t speaker, std::size_t j) const;
};

struct Utterance {
  std::size_t speaker = 0;
  PhoneSeq phones;
  std::vector<Embedding> embeddings;
  // Generating component per phone. Evaluation only; may be empty.
  std::vector<std::size_t> latent_components;
  bool operator==(const Utterance &) const = default;
};

using Corpus = std::vector<Utterance>;

struct OracleCorpus {
  Oracle oracle;
  Corpus train;
  Corpus test;
};

/// Draws means, weights and speaker maps. Throws ConfigError when the
/// requested separation cannot be met inside the box.
Oracle BuildOracle(const OracleSpec &spec);

/// Oracle plus train/test corpora. Every utterance has its own derived
/// random stream, so the result does not depend on `threads`.
OracleCorpus GenCorpus(const OracleSpec &spec, std::size_t threads = 1);

/// Exact log-likelihood of the utterance's embeddings under the generating
/// mixtures of its speaker.
double OracleLoglik(const Oracle &oracle, const Utterance &utt);

/// Mean per-phone oracle log-likelihood over a corpus.
double OracleMeanLoglikPerPhone(const Oracle &oracle, const Corpus &corpus);

std::size_t CountPhones(const Corpus &corpus);

/// Hash of phones, speakers and embedding bit patterns.
std::string CorpusFingerprint(const Corpus &corpus);

/// Throws ShapeError/IndexError unless every record fits the model.
void CheckCorpusForModel(const Corpus &corpus, const PredictorConfig &config);

OracleSpec OracleSpecFromJson(const Json &j);
Json OracleSpecToJson(const OracleSpec &spec);
Json OracleToJson(const Oracle &oracle);
Oracle OracleFromJson(const Json &j);

/// One JSON object per line; latent labels live under "eval_only".
std::string CorpusToJsonl(const Corpus &corpus);
Corpus CorpusFromJsonl(const std::string &text, const std::string &what);

/// Layout: <dir>/train.jsonl, <dir>/test.jsonl, <dir>/oracle.json.
void SaveOracleCorpus(const std::filesystem::path &dir, const OracleCorpus &corpus);
OracleCorpus LoadOracleCorpus(const std::filesystem::path &dir);

}  // namespace prosody

#endif  // PROSODY_SYNTHDATA_H_
