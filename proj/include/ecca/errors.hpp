/*
 * Copyright 2026 The ecca-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace ecca {

enum class ErrorKind {
  kInvalidInput,
  kDegenerateInput,
  kInfeasible,
  kNotPositiveDefinite,
  kStalledStep,
  kIo,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kDegenerateInput: return "degenerate input";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kNotPositiveDefinite: return "not positive definite";
    case ErrorKind::kStalledStep: return "stalled step";
    case ErrorKind::kIo: return "i/o";
  }
  return "unknown";
}

// Single exception type for the library; callers branch on kind().
// A stalled Newton step carries the last accepted iterate.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Error(ErrorKind kind, const std::string& what, Eigen::VectorXd last_iterate)
      : std::runtime_error(what),
        kind_(kind),
        last_iterate_(std::move(last_iterate)) {}

  ErrorKind kind() const noexcept { return kind_; }

  const std::optional<Eigen::VectorXd>& last_iterate() const noexcept {
    return last_iterate_;
  }

  // Same error with a location prefix, e.g. "outer 3, stage Z: row 7: ...".
  Error with_context(const std::string& context) const {
    Error e(kind_, context + ": " + what());
    e.last_iterate_ = last_iterate_;
    return e;
  }

 private:
  ErrorKind kind_;
  std::optional<Eigen::VectorXd> last_iterate_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

}  // namespace ecca
