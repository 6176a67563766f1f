// src/params.cc

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

#include "prosody/params.h"

#include "prosody/error.h"

namespace prosody {

std::size_t ParamSet::Add(std::string name, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  arrays_.push_back(ParamArray{std::move(name), std::move(shape),
                               std::vector<double>(n, 0.0)});
  return arrays_.size() - 1;
}

std::size_t ParamSet::IndexOf(const std::string &name) const {
  for (std::size_t i = 0; i < arrays_.size(); ++i)
    if (arrays_[i].name == name) return i;
  throw ConfigError("no parameter array named '" + name + "'");
}

ParamSet ParamSet::ZerosLike() const {
  ParamSet out = *this;
  out.SetZero();
  return out;
}

void ParamSet::SetZero() {
  for (auto &a : arrays_)
    for (auto &v : a.values) v = 0.0;
}

std::size_t ParamSet::TotalSize() const {
  std::size_t n = 0;
  for (const auto &a : arrays_) n += a.size();
  return n;
}

void ParamSet::Axpy(double scale, const ParamSet &other) {
  if (!SameLayout(other)) throw ShapeError("ParamSet::Axpy: layout mismatch");
  for (std::size_t i = 0; i < arrays_.size(); ++i)
    for (std::size_t j = 0; j < arrays_[i].size(); ++j)
      arrays_[i].values[j] += scale * other.arrays_[i].values[j];
}

void ParamSet::Scale(double factor) {
  for (auto &a : arrays_)
    for (auto &v : a.values) v *= factor;
}

double ParamSet::SquaredNorm() const {
  double acc = 0.0;
  for (const auto &a : arrays_)
    for (double v : a.values) acc += v * v;
  return acc;
}

bool ParamSet::SameLayout(const ParamSet &other) const {
  if (arrays_.size() != other.arrays_.size()) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i)
    if (arrays_[i].name != other.arrays_[i].name ||
        arrays_[i].shape != other.arrays_[i].shape)
      return false;
  return true;
}

}  // namespace prosody
