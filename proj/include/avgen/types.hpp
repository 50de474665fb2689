// Copyright 2026 The avgen Authors.
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

#ifndef AVGEN_TYPES_HPP_
#define AVGEN_TYPES_HPP_

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace avgen {

// Error families. Each CLI command maps these onto exit codes.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A single (attribute, value) pair: the unit of prediction and scoring.
struct AttrValuePair {
  std::string attribute;
  std::string value;

  friend auto operator<=>(const AttrValuePair&, const AttrValuePair&) = default;
};

/// One product: its text and the gold attribute-value pairs annotated on it.
struct ProductRecord {
  std::string id;
  std::string category;
  std::string text;
  std::vector<AttrValuePair> pairs;

  friend bool operator==(const ProductRecord&, const ProductRecord&) = default;
};

enum class Task { VE, AG, E2E };

inline std::string_view task_name(Task t) {
  switch (t) {
    case Task::VE: return "VE";
    case Task::AG: return "AG";
    case Task::E2E: return "E2E";
  }
  return "?";
}

/// One (source, target) instance fed to a seq2seq backend.
struct TaskExample {
  std::string source;
  std::string target;
  Task task = Task::E2E;

  friend bool operator==(const TaskExample&, const TaskExample&) = default;
};

}  // namespace avgen

#endif  // AVGEN_TYPES_HPP_
