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

#ifndef AVGEN_NORMALIZE_HPP_
#define AVGEN_NORMALIZE_HPP_

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "avgen/text.hpp"
#include "avgen/types.hpp"

namespace avgen {

/// Sentence punctuation removed from the end of values before matching.
inline constexpr std::string_view kTrailingPunctuation = ".,;:!?";

inline std::string normalize_attribute(std::string_view attribute) {
  return text::to_lower(text::collapse_whitespace(attribute));
}

inline std::string normalize_value(std::string_view value) {
  std::string v = text::to_lower(text::collapse_whitespace(value));
  while (!v.empty() && kTrailingPunctuation.find(v.back()) != std::string_view::npos) {
    v.pop_back();
    while (!v.empty() && text::is_space(v.back())) v.pop_back();
  }
  return v;
}

/// Matching form of a pair: lowercase, whitespace runs collapsed, trimmed,
/// trailing sentence punctuation stripped from the value. Idempotent.
inline AttrValuePair normalize_pair(const AttrValuePair& p) {
  return {normalize_attribute(p.attribute), normalize_value(p.value)};
}

/// Drops pairs whose normalized form was already seen; keeps first
/// occurrences in order. Returns the number of pairs removed.
inline std::size_t dedup_pairs(std::vector<AttrValuePair>& pairs) {
  std::set<AttrValuePair> seen;
  std::vector<AttrValuePair> kept;
  kept.reserve(pairs.size());
  for (auto& p : pairs) {
    if (seen.insert(normalize_pair(p)).second) kept.push_back(std::move(p));
  }
  std::size_t removed = pairs.size() - kept.size();
  pairs = std::move(kept);
  return removed;
}

}  // namespace avgen

#endif  // AVGEN_NORMALIZE_HPP_
