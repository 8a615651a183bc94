// Copyright 2026 The srouter Authors
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

#include <stdexcept>
#include <string>

namespace srouter {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the config loader and the DSL compiler.
class ConfigError : public Error {
 public:
  enum class Kind { kParse, kReference, kConstraint };

  ConfigError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Raised by model selection (unknown algorithm, empty candidates, bad model file).
class SelectionError : public Error {
 public:
  using Error::Error;
};

/// Raised by policy analysis when the leaf count is over the enumeration bound.
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace srouter
