// Copyright 2026 The tagcl Authors.
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

#ifndef TAGCL_ERRORS_HPP_
#define TAGCL_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace tagcl {

// Invalid configuration or malformed input data. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Network failure after the retry budget was spent. CLI exit code 3.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int last_status)
      : std::runtime_error(what), last_status_(last_status) {}
  int last_status() const { return last_status_; }

 private:
  int last_status_;
};

// Shape mismatch, non-finite value or other numeric failure. Exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Some nodes could not be augmented. Exit code 5.
class AugmentationError : public std::runtime_error {
 public:
  AugmentationError(const std::string& what, std::vector<int> failed_nodes)
      : std::runtime_error(what), failed_nodes_(std::move(failed_nodes)) {}
  const std::vector<int>& failed_nodes() const { return failed_nodes_; }

 private:
  std::vector<int> failed_nodes_;
};

}  // namespace tagcl

#endif  // TAGCL_ERRORS_HPP_
