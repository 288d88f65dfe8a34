// Copyright 2026 The AGIA Risk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AGIA_ERRORS_HPP_
#define AGIA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace agia {

// An argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A required parameter is missing from an otherwise valid configuration.
class ConfigurationError : public std::invalid_argument {
 public:
  explicit ConfigurationError(const std::string& what)
      : std::invalid_argument(what) {}
};

class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// The sample-mean reconstruction needs every scale to be non-zero.
class ReconstructionError : public std::runtime_error {
 public:
  explicit ReconstructionError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace agia

#endif  // AGIA_ERRORS_HPP_
