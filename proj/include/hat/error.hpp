// Copyright 2026 The HAT Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input data failed validation (rotations, configs, files).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-finite values, non-PSD covariances and similar numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : NumericalError(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Yaw vector too short to renormalize. `instance` is the row that failed,
/// or npos when the anchor was not part of a batch.
class DegenerateYawError : public NumericalError {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit DegenerateYawError(const std::string& what, std::size_t instance = npos)
      : NumericalError(what), instance_(instance) {}
  std::size_t instance() const { return instance_; }

 private:
  std::size_t instance_;
};

/// Required input file or artifact is absent.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace hat
