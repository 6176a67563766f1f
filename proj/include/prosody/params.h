// include/prosody/params.h

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

#ifndef PROSODY_PARAMS_H_
#define PROSODY_PARAMS_H_

#include <cstddef>
#include <string>
#include <vector>

namespace prosody {

/// Named, row-major array of 64-bit parameters.
struct ParamArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape.front(); }
  std::size_t cols() const { return shape.size() < 2 ? values.size() : shape[1]; }
  double &at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  bool operator==(const ParamArray &) const = default;
};

/// Ordered collection of parameter arrays. The order is part of the model
/// definition and is preserved by checkpoints.
class ParamSet {
 public:
  std::size_t Add(std::string name, std::vector<std::size_t> shape);

  std::size_t size() const { return arrays_.size(); }
  ParamArray &operator[](std::size_t i) { return arrays_[i]; }
  const ParamArray &operator[](std::size_t i) const { return arrays_[i]; }

  /// Index of the array with this name; throws ConfigError if absent.
  std::size_t IndexOf(const std::string &name) const;

  /// Copy with identical layout and all values zero.
  ParamSet ZerosLike() const;
  void SetZero();
  std::size_t TotalSize() const;
  /// this += scale * other. Layouts must match.
  void Axpy(double scale, const ParamSet &other);
  void Scale(double factor);
  double SquaredNorm() const;
  bool SameLayout(const ParamSet &other) const;

  auto begin() { return arrays_.begin(); }
  auto end() { return arrays_.end(); }
  auto begin() const { return arrays_.begin(); }
  auto end() const { return arrays_.end(); }

  bool operator==(const ParamSet &) const = default;

 private:
  std::vector<ParamArray> arrays_;
};

}  // namespace prosody

#endif  // PROSODY_PARAMS_H_
