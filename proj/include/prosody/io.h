// include/prosody/io.h

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

#ifndef PROSODY_IO_H_
#define PROSODY_IO_H_

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "prosody/error.h"

namespace prosody {

using Json = nlohmann::json;

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void WriteFileAtomic(const std::filesystem::path &path, std::string_view content);

std::string ReadFile(const std::filesystem::path &path);

/// Parses a JSON document; syntax errors become ConfigError naming `what`.
Json ParseConfigJson(std::string_view text, const std::string &what);

/// Throws ConfigError unless `obj` is an object whose keys all appear in
/// `allowed`.
void RejectUnknownKeys(const Json &obj, std::initializer_list<std::string_view> allowed,
                       const std::string &context);

/// Typed field access with ConfigError on a type mismatch.
template <typename T>
void ReadField(const Json &obj, const char *key, T &out, const std::string &context) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception &e) {
    throw ConfigError(context + "." + key + ": " + e.what());
  }
}

/// 64-bit FNV-1a over raw bytes.
class Fingerprint {
 public:
  void Add(const void *data, std::size_t size);
  template <typename T>
  void AddValue(const T &v) { Add(&v, sizeof(v)); }
  std::uint64_t value() const { return hash_; }
  std::string Hex() const;

 private:
  std::uint64_t hash_ = 14695981039346656037ull;
};

}  // namespace prosody

#endif  // PROSODY_IO_H_
