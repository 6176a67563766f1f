// include/prosody/error.h

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

#ifndef PROSODY_ERROR_H_
#define PROSODY_ERROR_H_

#include <stdexcept>
#include <string>

namespace prosody {

/// Error categories. Each maps onto a distinct process exit code in the CLI.
enum class ErrorKind {
  kConfig = 2,
  kShape = 3,
  kNumerical = 4,
  kIndex = 5,
  kIo = 6,
  kEval = 7,
  kInvalidParameter = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string &w) : Error(ErrorKind::kConfig, w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string &w) : Error(ErrorKind::kShape, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string &w)
      : Error(ErrorKind::kNumerical, w) {}
};
struct IndexError : Error {
  explicit IndexError(const std::string &w) : Error(ErrorKind::kIndex, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string &w) : Error(ErrorKind::kIo, w) {}
};
struct EvalError : Error {
  explicit EvalError(const std::string &w) : Error(ErrorKind::kEval, w) {}
};
struct InvalidParameterError : Error {
  explicit InvalidParameterError(const std::string &w)
      : Error(ErrorKind::kInvalidParameter, w) {}
};

}  // namespace prosody

#endif  // PROSODY_ERROR_H_
