/*
 * Copyright 2026 The mbsketch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mbsketch {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid code geometry, selection size, or other configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " at line " + std::to_string(line) : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector/matrix shapes (key vs feature, fusion inputs).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Mathematical precondition violated (e.g. k > n in leakage formulas).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Enrollment could not produce a sketch for any of the attempted keys.
class DecodeFailure : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss during training; message names stage and epoch.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbsketch
