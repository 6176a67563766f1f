// include/prosody/cloning.h

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

#ifndef PROSODY_CLONING_H_
#define PROSODY_CLONING_H_

#include <cstdint>
#include <span>
#include <vector>

#include "prosody/gmm.h"
#include "prosody/predictor.h"

namespace prosody {

/// Per-phone Gaussian component indices.
using ComponentIndexSeq = std::vector<std::size_t>;

/// MAP component of every reference embedding under the source speaker's
/// predicted mixtures. The predictor history is the reference itself.
ComponentIndexSeq Identify(std::span<const std::size_t> phones,
                           SpeakerRef src_speaker,
                           std::span<const Embedding> src_embeddings,
                           const PredictorParams &params);

enum class CloneEmission {
  kMean,              // emit the selected component's mean
  kSampleComponent,   // draw from the selected component
};

struct CloneOptions {
  CloneEmission emission = CloneEmission::kMean;
  std::uint64_t seed = 0;   // used by kSampleComponent only
};

/// Runs the target speaker's predictor and emits, at each position, the
/// component chosen by `indices`. Emitted vectors form the history.
std::vector<Embedding> Clone(std::span<const std::size_t> phones,
                             SpeakerRef tgt_speaker,
                             std::span<const std::size_t> indices,
                             const PredictorParams &params,
                             const CloneOptions &options = {});

struct CloneResult {
  ComponentIndexSeq indices;
  std::vector<Embedding> embeddings;
};

CloneResult ClonePipeline(std::span<const std::size_t> phones,
                          SpeakerRef src_speaker,
                          std::span<const Embedding> src_embeddings,
                          SpeakerRef tgt_speaker, const PredictorParams &params,
                          const CloneOptions &options = {});

}  // namespace prosody

#endif  // PROSODY_CLONING_H_
