// Copyright 2026 The lqgmfg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LQGMFG_ERRORS_H_
#define LQGMFG_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lqgmfg {

// Invalid user-supplied parameter. `field` names the offending input.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Mathematical domain violation (empty sample, non-finite quantile, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Backward integration produced a non-finite or oversized value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int node, const std::string& message)
      : std::runtime_error(message + " (first bad node " +
                           std::to_string(node) + ")"),
        node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

// Quadrature residual check failed.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(double residual, const std::string& message)
      : std::runtime_error(message + " (achieved residual " +
                           std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace lqgmfg

#endif  // LQGMFG_ERRORS_H_
