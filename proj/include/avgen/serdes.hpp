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

// Text encodings between structured records and seq2seq strings:
// highlight insertion, flattened value lists, flattened pair lists, task
// prefixes, and the tolerant parsers that invert them.

#ifndef AVGEN_SERDES_HPP_
#define AVGEN_SERDES_HPP_

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "avgen/normalize.hpp"
#include "avgen/text.hpp"
#include "avgen/types.hpp"

namespace avgen {

// Normative reserved strings.
inline constexpr std::string_view kSeparator = " | ";
inline constexpr std::string_view kSeparatorChar = "|";
inline constexpr std::string_view kHighlight = "<hl>";
inline constexpr std::string_view kAttributeKey = "attribute";
inline constexpr std::string_view kValueKey = "value";
inline constexpr std::string_view kPrefixVE = "extract value: ";
inline constexpr std::string_view kPrefixAG = "generate attribute: ";

enum class StrategyKind { Pipeline, Multitask, End2End, Ensemble };

inline std::string_view strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::Pipeline: return "pipeline";
    case StrategyKind::Multitask: return "multitask";
    case StrategyKind::End2End: return "end2end";
    case StrategyKind::Ensemble: return "ensemble";
  }
  return "?";
}

inline StrategyKind parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::Pipeline, StrategyKind::Multitask, StrategyKind::End2End,
                 StrategyKind::Ensemble}) {
    if (strategy_name(k) == name) return k;
  }
  throw UsageError("unknown strategy '" + std::string(name) + "'");
}

template <class T>
struct ParseReport {
  std::vector<T> parsed;
  std::size_t malformed_segments = 0;
  std::size_t duplicates = 0;
  std::string raw;
};

namespace detail {

// Length of a `keyword \s* :` match at `pos`, or 0.
inline std::size_t keyword_colon_at(std::string_view s, std::size_t pos, std::string_view keyword) {
  if (s.substr(pos, keyword.size()) != keyword) return 0;
  std::size_t i = pos + keyword.size();
  while (i < s.size() && text::is_space(s[i])) ++i;
  return (i < s.size() && s[i] == ':') ? i + 1 - pos : 0;
}

inline bool erase_keyword_colon(std::string& s, std::string_view keyword) {
  bool erased = false;
  for (std::size_t pos = s.find(keyword); pos != std::string::npos; pos = s.find(keyword, pos)) {
    if (std::size_t len = keyword_colon_at(s, pos, keyword)) {
      s.erase(pos, len);
      erased = true;
    } else {
      ++pos;
    }
  }
  return erased;
}

// Offset of the first `, \s* value \s* :` delimiter at or after `from`.
inline std::optional<std::pair<std::size_t, std::size_t>> find_value_delimiter(std::string_view s,
                                                                               std::size_t from) {
  for (std::size_t pos = s.find(',', from); pos != std::string_view::npos; pos = s.find(',', pos + 1)) {
    std::size_t i = pos + 1;
    while (i < s.size() && text::is_space(s[i])) ++i;
    if (std::size_t len = keyword_colon_at(s, i, kValueKey)) return std::pair{pos, i + len};
  }
  return std::nullopt;
}

}  // namespace detail

/// Removes every reserved sequence ("|", "<hl>", "attribute:", "value:",
/// the latter two with optional space before the colon) until none remain,
/// then trims. Strings for which this is the identity are "sanitization
/// stable" and survive a render/parse round trip unchanged.
inline std::string sanitize(std::string_view s) {
  std::string out(s);
  bool changed = true;
  while (changed) {
    changed = false;
    changed |= text::erase_all(out, kHighlight);
    changed |= detail::erase_keyword_colon(out, kAttributeKey);
    changed |= detail::erase_keyword_colon(out, kValueKey);
    changed |= text::erase_all(out, kSeparatorChar);
  }
  return std::string(text::trim(out));
}

/// Product text with any literal highlight tokens removed.
inline std::string sanitize_text(std::string_view s) {
  std::string out(s);
  text::erase_all(out, kHighlight);
  return std::string(text::trim(out));
}

inline std::string flatten_values(const std::vector<std::string>& values) {
  std::vector<std::string> clean;
  clean.reserve(values.size());
  for (const auto& v : values) clean.push_back(sanitize(v));
  return text::join(clean, kSeparator);
}

/// Splits on the separator and trims; blank segments count as malformed,
/// repeats (under value normalization) count as duplicates. Total.
inline ParseReport<std::string> parse_values(std::string_view generated) {
  ParseReport<std::string> report;
  report.raw = std::string(generated);
  if (text::trim(generated).empty()) return report;
  std::set<std::string> seen;
  for (auto segment : text::split(generated, kSeparatorChar)) {
    auto value = text::trim(segment);
    if (value.empty()) {
      ++report.malformed_segments;
    } else if (!seen.insert(normalize_value(value)).second) {
      ++report.duplicates;
    } else {
      report.parsed.emplace_back(value);
    }
  }
  return report;
}

/// Wraps the first case-insensitive occurrence of `value` in `text` as
/// "<hl> surface <hl>", keeping the surface form from `text`.
inline std::optional<std::string> highlight_value(std::string_view text, std::string_view value) {
  std::size_t pos = text::ifind(text, value);
  if (pos == std::string_view::npos) return std::nullopt;
  std::string out;
  out.reserve(text.size() + 2 * kHighlight.size() + 2);
  out.append(text.substr(0, pos));
  out.append(kHighlight).push_back(' ');
  out.append(text.substr(pos, value.size()));
  out.push_back(' ');
  out.append(kHighlight);
  out.append(text.substr(pos + value.size()));
  return out;
}

inline std::string render_pair(const AttrValuePair& p) {
  std::string out;
  out.append(kAttributeKey).append(": ").append(sanitize(p.attribute));
  out.append(", ").append(kValueKey).append(": ").append(sanitize(p.value));
  return out;
}

/// "attribute: a1, value: v1 | attribute: a2, value: v2 | ..."
inline std::string render_pairs(const std::vector<AttrValuePair>& pairs) {
  std::vector<std::string> parts;
  parts.reserve(pairs.size());
  for (const auto& p : pairs) parts.push_back(render_pair(p));
  return text::join(parts, kSeparator);
}

/// Inverse of a single rendered pair; whitespace around ':' and ',' optional.
inline std::optional<AttrValuePair> parse_pair(std::string_view segment) {
  auto s = text::trim(segment);
  std::size_t head = detail::keyword_colon_at(s, 0, kAttributeKey);
  if (head == 0) return std::nullopt;
  auto delim = detail::find_value_delimiter(s, head);
  if (!delim) return std::nullopt;
  auto attribute = text::trim(s.substr(head, delim->first - head));
  auto value = text::trim(s.substr(delim->second));
  if (attribute.empty() || value.empty()) return std::nullopt;
  return AttrValuePair{std::string(attribute), std::string(value)};
}

inline ParseReport<AttrValuePair> parse_pairs(std::string_view generated) {
  ParseReport<AttrValuePair> report;
  report.raw = std::string(generated);
  if (text::trim(generated).empty()) return report;
  std::set<AttrValuePair> seen;
  for (auto segment : text::split(generated, kSeparatorChar)) {
    auto pair = parse_pair(segment);
    if (!pair) {
      ++report.malformed_segments;
    } else if (!seen.insert(normalize_pair(*pair)).second) {
      ++report.duplicates;
    } else {
      report.parsed.push_back(std::move(*pair));
    }
  }
  return report;
}

inline std::string add_task_prefix(Task task, std::string_view source) {
  switch (task) {
    case Task::VE: return std::string(kPrefixVE).append(source);
    case Task::AG: return std::string(kPrefixAG).append(source);
    case Task::E2E: break;
  }
  throw UsageError("task prefixes exist only for VE and AG");
}

struct BuildReport {
  std::size_t records = 0;
  std::size_t records_without_pairs = 0;
  std::size_t unusable_pairs = 0;     // empty after sanitization
  std::size_t duplicate_values = 0;   // repeated in the VE target
  std::size_t values_not_found = 0;   // AG example skipped

  BuildReport& operator+=(const BuildReport& o) {
    records += o.records;
    records_without_pairs += o.records_without_pairs;
    unusable_pairs += o.unusable_pairs;
    duplicate_values += o.duplicate_values;
    values_not_found += o.values_not_found;
    return *this;
  }
};

/// Training instances for one record.
///
/// Pipeline and Multitask: one VE example whose target is the flattened
/// gold values (first occurrence of each value kept), then one AG example
/// per gold pair whose value can be highlighted in the text. Multitask
/// sources carry the task prefix. End2End: a single example targeting the
/// rendered pair list.
inline std::vector<TaskExample> make_training_examples(const ProductRecord& record, StrategyKind strategy,
                                                       BuildReport* report = nullptr) {
  if (strategy == StrategyKind::Ensemble) throw UsageError("ensembles are not trained directly");
  BuildReport local;
  BuildReport& rep = report ? *report : local;
  ++rep.records;

  const std::string text = sanitize_text(record.text);
  std::vector<AttrValuePair> usable;
  for (const auto& p : record.pairs) {
    AttrValuePair clean{sanitize(p.attribute), sanitize(p.value)};
    if (clean.attribute.empty() || clean.value.empty()) {
      ++rep.unusable_pairs;
      continue;
    }
    usable.push_back(std::move(clean));
  }
  dedup_pairs(usable);
  if (usable.empty() || text.empty()) {
    ++rep.records_without_pairs;
    return {};
  }

  if (strategy == StrategyKind::End2End) {
    return {TaskExample{text, render_pairs(usable), Task::E2E}};
  }

  const bool prefixed = strategy == StrategyKind::Multitask;
  auto source_for = [&](Task task, std::string s) {
    return prefixed ? add_task_prefix(task, s) : s;
  };

  std::vector<std::string> values;
  std::set<std::string> seen;
  for (const auto& p : usable) {
    if (seen.insert(normalize_value(p.value)).second) {
      values.push_back(p.value);
    } else {
      ++rep.duplicate_values;
    }
  }
  std::vector<TaskExample> out;
  out.push_back({source_for(Task::VE, text), flatten_values(values), Task::VE});
  for (const auto& p : usable) {
    auto highlighted = highlight_value(text, p.value);
    if (!highlighted) {
      ++rep.values_not_found;
      continue;
    }
    out.push_back({source_for(Task::AG, std::move(*highlighted)), p.attribute, Task::AG});
  }
  return out;
}

}  // namespace avgen

#endif  // AVGEN_SERDES_HPP_
