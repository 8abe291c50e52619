// Copyright 2026 The DIVE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dive {

/// Bad shapes, out-of-range configuration values, unsatisfiable requests.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed WAV/RTTM/manifest/config input. `position()` is a byte offset
/// for binary formats and a 1-based line number for text formats.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::int64_t position)
      : std::runtime_error(what + " (at " + std::to_string(position) + ")"),
        position_(position) {}
  std::int64_t position() const { return position_; }

 private:
  std::int64_t position_;
};

/// Corrupt or incompatible checkpoint. `field()` names the failing field.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& field, const std::string& what)
      : std::runtime_error("checkpoint field '" + field + "': " + what),
        field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Non-finite loss or gradient during optimization.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)),
        step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

/// The current training example cannot be used (too short, a speaker has no
/// solo frame); the caller should draw a different one.
class ResampleSignal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// DER requested over a region with no scored reference speech.
class UndefinedDer : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace dive
