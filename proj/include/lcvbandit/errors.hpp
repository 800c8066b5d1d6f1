// Copyright 2026 The lcvbandit Authors.
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

#ifndef LCVBANDIT_ERRORS_HPP_
#define LCVBANDIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace lcv {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Not enough samples for the requested estimate.
class NoEstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The control-variate system is singular; the CV carries no usable signal.
class DegenerateCvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An index was requested before the policy's warm start finished.
class WarmStartIncompleteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration. Carries the offending key path and the
// 1-based source line when known (0 otherwise).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, int line, const std::string& message)
      : std::runtime_error(format(key_path, line, message)),
        key_path_(std::move(key_path)),
        line_(line) {}
  explicit ConfigError(const std::string& message) : ConfigError("", 0, message) {}

  const std::string& key_path() const noexcept { return key_path_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key_path, int line, const std::string& message) {
    std::string where = key_path;
    if (line > 0) {
      const std::string at = "line " + std::to_string(line);
      where = where.empty() ? at : where + " (" + at + ")";
    }
    return where.empty() ? message : where + ": " + message;
  }

  std::string key_path_;
  int line_;
};

}  // namespace lcv

#endif  // LCVBANDIT_ERRORS_HPP_
