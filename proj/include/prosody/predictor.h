// include/prosody/predictor.h

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

#ifndef PROSODY_PREDICTOR_H_
#define PROSODY_PREDICTOR_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prosody/gmm.h"
#include "prosody/params.h"
#include "prosody/rng.h"

namespace prosody {

using PhoneSeq = std::vector<std::size_t>;
using SpeakerRef = std::optional<std::size_t>;

enum class CellType { kElman };

std::string CellTypeName(CellType cell);
CellType ParseCellType(const std::string &name);

/// Fixed per-dimension affine map between corpus units and the units the
/// network works in: z = (e - shift) / scale. Empty means identity.
struct EmbeddingNorm {
  Vector shift;
  Vector scale;

  bool empty() const { return shift.empty(); }
  bool operator==(const EmbeddingNorm &) const = default;
};

/// Shape and numeric settings of the autoregressive MDN.
///
/// speakers == 0 selects single-speaker mode: a recurrent cell over
/// [phone context; previous embedding; state] feeds one head that emits
/// alpha, m and v directly. speakers > 0 selects multi-speaker mode: the
/// speaker-independent head reads the phone context only and emits m, v;
/// the recurrent cell runs on the speaker-dependent context and feeds a
/// head that emits the mixture logits and the per-phone diagonal
/// transforms (A, b, C, d). Speaker-dependent means and log-variances are
///
///   m_s = Lm(tanh(A * m + b)),   v_s = Lv(tanh(C * v + d))
///
/// with Lm, Lv global affine maps shared by all phones, speakers and
/// components.
///
/// All of the above runs in normalized units (see EmbeddingNorm). Mixtures
/// handed to callers and losses are in corpus units.
struct PredictorConfig {
  std::size_t num_components = 5;   // M
  std::size_t dim = 4;              // D
  std::size_t hidden = 16;          // H
  std::size_t recurrent = 16;       // R
  std::size_t vocab = 10;           // V
  std::size_t speakers = 0;         // S
  CellType cell = CellType::kElman;
  LogVarClamp clamp;
  EmbeddingNorm norm;

  bool MultiSpeaker() const { return speakers > 0; }
  void Validate() const;
  bool operator==(const PredictorConfig &) const = default;
};

/// Learnable arrays of the predictor plus the configuration that shapes them.
class PredictorParams {
 public:
  /// All-zero parameters with the layout implied by `config`.
  explicit PredictorParams(const PredictorConfig &config);

  /// uniform(-0.1, 0.1) everywhere except the log-variance part of the
  /// speaker-independent head bias, which starts at 0. Multi-speaker mode
  /// also starts the transforms near pass-through (A and C biases 1,
  /// Lm = Lv = I) and draws the speaker-independent mean biases from
  /// uniform(-1, 1).
  static PredictorParams Initialize(const PredictorConfig &config,
                                    std::uint64_t seed);

  const PredictorConfig &config() const { return config_; }
  ParamSet &arrays() { return arrays_; }
  const ParamSet &arrays() const { return arrays_; }
  ParamArray &array(const std::string &name) { return arrays_[arrays_.IndexOf(name)]; }
  const ParamArray &array(const std::string &name) const {
    return arrays_[arrays_.IndexOf(name)];
  }

  /// Replaces the values; throws ShapeError if the layout differs.
  void SetArrays(ParamSet arrays);

  // Array slots. kNone for arrays absent in the current mode.
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  struct Slots {
    std::size_t phone_table = kNone;
    std::size_t speaker_table = kNone;
    std::size_t start_embedding = kNone;
    std::size_t recur_w = kNone;
    std::size_t recur_b = kNone;
    std::size_t si_head_w = kNone;
    std::size_t si_head_b = kNone;
    std::size_t sd_head_w = kNone;
    std::size_t sd_head_b = kNone;
    std::size_t linear_m_w = kNone;
    std::size_t linear_m_b = kNone;
    std::size_t linear_v_w = kNone;
    std::size_t linear_v_b = kNone;
  };
  const Slots &slots() const { return slots_; }

  bool operator==(const PredictorParams &other) const {
    return config_ == other.config_ && arrays_ == other.arrays_;
  }

 private:
  PredictorConfig config_;
  ParamSet arrays_;
  Slots slots_;
};

/// Per-position hidden contexts.
struct EncodedPhones {
  std::vector<Vector> h_si;
  std::optional<std::vector<Vector>> h_sd;
};

/// h_si[k] = phone_table[phones[k]], h_sd[k] = h_si[k] + speaker_table[s].
EncodedPhones Encode(std::span<const std::size_t> phones, SpeakerRef speaker,
                     const PredictorParams &params);

struct RecurrentState {
  Vector r;
};

RecurrentState InitialState(const PredictorParams &params);

/// Corpus units to network units.
Embedding NormalizeEmbedding(const EmbeddingNorm &norm, std::span<const double> e);

/// Network units to corpus units for a whole mixture.
DiagGmm DenormalizeGmm(const EmbeddingNorm &norm, DiagGmm gmm);

/// Per-position log-Jacobian: sum_d log scale_d.
double NormLogJacobian(const EmbeddingNorm &norm);

/// Raw outputs in network units.
struct StepOutput {
  RawGmmParams si_raw;
  std::optional<RawGmmParams> sd_raw;
  RecurrentState state;
};

/// One autoregressive step. In multi-speaker mode si_raw carries zero
/// logits (the speaker-independent branch predicts no weights). e_prev is
/// in network units.
StepOutput Step(std::span<const double> h_si,
                std::optional<std::span<const double>> h_sd,
                std::span<const double> e_prev, const RecurrentState &state,
                const PredictorParams &params);

/// Learned history vector used in place of e_{k-1} at k = 0, network units.
Embedding StartEmbedding(const PredictorParams &params);

struct SequenceLossResult {
  double loss = 0.0;
  ParamSet grads;
};

/// sum_k -log p(e_k | e_<k, phones, speaker) under teacher forcing, with
/// gradients for every parameter array via backpropagation through time.
/// Embeddings are constants.
SequenceLossResult SequenceNll(std::span<const std::size_t> phones,
                               SpeakerRef speaker,
                               std::span<const Embedding> embeddings,
                               const PredictorParams &params);

/// Forward-only variant of SequenceNll.
double SequenceLoss(std::span<const std::size_t> phones, SpeakerRef speaker,
                    std::span<const Embedding> embeddings,
                    const PredictorParams &params);

/// Activated per-phone mixtures under teacher forcing with the given history.
std::vector<DiagGmm> PredictGmmSequence(std::span<const std::size_t> phones,
                                        SpeakerRef speaker,
                                        std::span<const Embedding> given,
                                        const PredictorParams &params);

struct SampledSequence {
  std::vector<Embedding> embeddings;
  std::vector<std::size_t> components;
};

/// Free-running ancestral sampling: each sampled embedding becomes the
/// history of the next position.
SampledSequence SampleSequence(std::span<const std::size_t> phones,
                               SpeakerRef speaker,
                               const PredictorParams &params, RandomSource &rng);

/// Incremental driver for callers that choose each position's embedding
/// themselves (teacher forcing, sampling, mean emission).
class Rollout {
 public:
  Rollout(const PredictorParams &params, std::span<const std::size_t> phones,
          SpeakerRef speaker);

  std::size_t size() const { return encoded_.h_si.size(); }
  std::size_t position() const { return position_; }
  bool done() const { return position_ >= size(); }

  /// Raw outputs for the current position given the history fed so far.
  /// Evaluated once per position and cached.
  const StepOutput &Current();
  /// Activated mixture that models the current position: speaker-dependent
  /// in multi-speaker mode, otherwise speaker-independent.
  DiagGmm CurrentGmm();
  /// Uses `e` (corpus units) as the current position's embedding and moves on.
  void Advance(std::span<const double> e);

 private:
  const PredictorParams &params_;
  EncodedPhones encoded_;
  std::size_t position_ = 0;
  Embedding e_prev_;
  RecurrentState state_;
  std::optional<StepOutput> current_;
};

}  // namespace prosody

#endif  // PROSODY_PREDICTOR_H_
