// src/cloning.cc

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

#include "prosody/cloning.h"

#include <cmath>
#include <string>

#include "prosody/error.h"

namespace prosody {

ComponentIndexSeq Identify(std::span<const std::size_t> phones,
                           SpeakerRef src_speaker,
                           std::span<const Embedding> src_embeddings,
                           const PredictorParams &params) {
  if (src_embeddings.size() != phones.size())
    throw ShapeError("identify: " + std::to_string(src_embeddings.size()) +
                     " embeddings for " + std::to_string(phones.size()) + " phones");
  Rollout rollout(params, phones, src_speaker);
  ComponentIndexSeq out;
  out.reserve(phones.size());
  for (const Embedding &e : src_embeddings) {
    out.push_back(MapComponent(rollout.CurrentGmm(), e));
    rollout.Advance(e);
  }
  return out;
}

std::vector<Embedding> Clone(std::span<const std::size_t> phones,
                             SpeakerRef tgt_speaker,
                             std::span<const std::size_t> indices,
                             const PredictorParams &params,
                             const CloneOptions &options) {
  if (indices.size() != phones.size())
    throw ShapeError("clone: " + std::to_string(indices.size()) +
                     " indices for " + std::to_string(phones.size()) + " phones");
  const std::size_t m = params.config().num_components;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= m)
      throw IndexError("clone: component index " + std::to_string(indices[k]) +
                       " at position " + std::to_string(k) + " but model has " +
                       std::to_string(m) + " components");
  }
  RandomSource rng(options.seed);
  Rollout rollout(params, phones, tgt_speaker);
  std::vector<Embedding> out;
  out.reserve(phones.size());
  for (std::size_t j : indices) {
    const DiagGmm gmm = rollout.CurrentGmm();
    Embedding e(gmm.means.row(j).begin(), gmm.means.row(j).end());
    if (options.emission == CloneEmission::kSampleComponent) {
      for (std::size_t d = 0; d < e.size(); ++d)
        e[d] += std::sqrt(gmm.variances(j, d)) * rng.Gaussian();
    }
    rollout.Advance(e);
    out.push_back(std::move(e));
  }
  return out;
}

CloneResult ClonePipeline(std::span<const std::size_t> phones,
                          SpeakerRef src_speaker,
                          std::span<const Embedding> src_embeddings,
                          SpeakerRef tgt_speaker, const PredictorParams &params,
                          const CloneOptions &options) {
  CloneResult r;
  r.indices = Identify(phones, src_speaker, src_embeddings, params);
  r.embeddings = Clone(phones, tgt_speaker, r.indices, params, options);
  return r;
}

}  // namespace prosody
