// Copyright 2026 the repro-dp authors
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

#ifndef REPRODP_ERROR_HPP_
#define REPRODP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace reprodp {

// Base for every library error. `kind()` is a stable machine-readable tag;
// the CLI maps InvalidArgument/ConfigError to exit 2 and NumericError to 3.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error("invalid-argument", what) {}
 protected:
  InvalidArgument(std::string kind, const std::string& what)
      : Error(std::move(kind), what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error("numeric-error", what) {}
 protected:
  NumericError(std::string kind, const std::string& what)
      : Error(std::move(kind), what) {}
};

class DegenerateCovariance : public NumericError {
 public:
  explicit DegenerateCovariance(const std::string& what)
      : NumericError("degenerate-covariance", what) {}
};

class InfeasibleBand : public InvalidArgument {
 public:
  explicit InfeasibleBand(const std::string& what)
      : InvalidArgument("infeasible-band", what) {}
};

class UnboundedGrid : public InvalidArgument {
 public:
  explicit UnboundedGrid(const std::string& what)
      : InvalidArgument("unbounded-grid", what) {}
};

class BracketError : public NumericError {
 public:
  explicit BracketError(const std::string& what)
      : NumericError("bracket-error", what) {}
};

class PathologicalBall : public NumericError {
 public:
  explicit PathologicalBall(const std::string& what)
      : NumericError("pathological-ball", what) {}
};

class NonFiniteSummary : public NumericError {
 public:
  explicit NonFiniteSummary(const std::string& what)
      : NumericError("non-finite-summary", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error("config-error", what) {}
};

}  // namespace reprodp

#endif  // REPRODP_ERROR_HPP_
