// Copyright 2026 The cemmaf Authors.
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

#ifndef CEMMAF_ERROR_HPP_
#define CEMMAF_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace cemmaf {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor, image, or latent dimensions disagree with what an operation needs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A file on disk is missing, truncated, or does not follow its format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A computation produced NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters, config keys, or fixture specifications.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cemmaf

#endif  // CEMMAF_ERROR_HPP_
