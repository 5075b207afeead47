// Copyright 2026 The GTA Authors
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

#ifndef GTA_ERRORS_H_
#define GTA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace gta {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input data or file contents. `field()` names the offending field
// (manifest key, array name, ...).
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Invalid configuration values (bad hyperparameters, mismatched shapes).
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Checksum or size mismatch in a stored artifact.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Non-finite or exploding numerics during training or sampling.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gta

#endif  // GTA_ERRORS_H_
