// include/prosody/rng.h

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

#ifndef PROSODY_RNG_H_
#define PROSODY_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace prosody {

/// Seeded random source. All randomness in the library flows through this
/// type so that a seed fully determines every output.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream keyed by (seed, a, b). Used for per-utterance and
  /// per-epoch streams whose values must not depend on scheduling.
  static RandomSource Derive(std::uint64_t seed, std::uint64_t a,
                             std::uint64_t b = 0);

  double Uniform(double lo, double hi);
  double Gaussian();
  std::size_t UniformIndex(std::size_t n);
  /// Draws an index with probability proportional to weights.
  std::size_t Categorical(std::span<const double> weights);
  /// Symmetric Dirichlet(1, ..., 1) sample of length n.
  std::vector<double> FlatDirichlet(std::size_t n);

  std::mt19937_64 &engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace prosody

#endif  // PROSODY_RNG_H_
