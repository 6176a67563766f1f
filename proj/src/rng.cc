// src/rng.cc

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

#include "prosody/rng.h"

#include <cmath>

#include "prosody/error.h"

namespace prosody {

RandomSource RandomSource::Derive(std::uint64_t seed, std::uint64_t a,
                                  std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return RandomSource((static_cast<std::uint64_t>(words[0]) << 32) | words[1]);
}

double RandomSource::Uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

double RandomSource::Gaussian() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

std::size_t RandomSource::UniformIndex(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::size_t RandomSource::Categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total))
    throw InvalidParameterError("Categorical: weights must have positive finite sum");
  double u = Uniform(0.0, total);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  // u landed on the rounding slack at the top of the range.
  return last_positive;
}

std::vector<double> RandomSource::FlatDirichlet(std::size_t n) {
  std::exponential_distribution<double> dist(1.0);
  std::vector<double> out(n);
  double total = 0.0;
  for (auto &x : out) {
    x = dist(engine_);
    total += x;
  }
  for (auto &x : out) x /= total;
  return out;
}

}  // namespace prosody
