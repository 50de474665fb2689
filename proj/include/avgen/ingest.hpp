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

// Corpus loaders (AE-110K, OA-Mine, MAVE, canonical), the category
// stratified splitter and corpus statistics.

#ifndef AVGEN_INGEST_HPP_
#define AVGEN_INGEST_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "avgen/normalize.hpp"
#include "avgen/random.hpp"
#include "avgen/records_io.hpp"
#include "avgen/text.hpp"
#include "avgen/types.hpp"

namespace avgen {

inline constexpr std::string_view kDefaultCategory = "default";

enum class CorpusFormat { AE110K, OAMine, MAVE, Canonical };

inline CorpusFormat parse_format(std::string_view name) {
  if (name == "ae110k") return CorpusFormat::AE110K;
  if (name == "oamine") return CorpusFormat::OAMine;
  if (name == "mave") return CorpusFormat::MAVE;
  if (name == "canonical") return CorpusFormat::Canonical;
  throw UsageError("unknown format '" + std::string(name) + "' (expected ae110k|oamine|mave|canonical)");
}

/// Per-file bookkeeping of everything a loader skipped or dropped.
struct LoadReport {
  std::size_t lines = 0;
  std::size_t malformed_lines = 0;
  std::size_t null_values = 0;        // AE-110K rows with a NULL sentinel value
  std::size_t negative_entries = 0;   // MAVE attribute entries without spans
  std::size_t invalid_pairs = 0;      // empty attribute or value
  std::size_t duplicate_pairs = 0;
  std::size_t empty_records = 0;      // blank text or no pairs left
  std::size_t duplicate_ids = 0;
  std::vector<std::string> issues;

  void note(std::size_t line, std::string what) {
    issues.push_back("line " + std::to_string(line) + ": " + std::move(what));
  }
};

inline Json to_json(const LoadReport& r) {
  return Json{{"lines", r.lines},
              {"malformed_lines", r.malformed_lines},
              {"null_values", r.null_values},
              {"negative_entries", r.negative_entries},
              {"invalid_pairs", r.invalid_pairs},
              {"duplicate_pairs", r.duplicate_pairs},
              {"empty_records", r.empty_records},
              {"duplicate_ids", r.duplicate_ids},
              {"issues", r.issues}};
}

using RecordSink = std::function<void(ProductRecord&&)>;

namespace detail {

// Enforces the record invariants and duplicate-id policy before emitting.
class RecordGate {
 public:
  RecordGate(const RecordSink& sink, LoadReport& report) : sink_(sink), report_(report) {}

  void emit(ProductRecord r, std::size_t line) {
    std::vector<AttrValuePair> valid;
    for (auto& p : r.pairs) {
      p.attribute = std::string(text::trim(p.attribute));
      p.value = std::string(text::trim(p.value));
      if (p.attribute.empty() || p.value.empty()) {
        ++report_.invalid_pairs;
        continue;
      }
      valid.push_back(std::move(p));
    }
    report_.duplicate_pairs += dedup_pairs(valid);
    r.pairs = std::move(valid);
    if (text::trim(r.text).empty() || r.pairs.empty()) {
      ++report_.empty_records;
      return;
    }
    if (!ids_.insert(r.id).second) {
      ++report_.duplicate_ids;
      report_.note(line, "duplicate id '" + r.id + "' ignored");
      return;
    }
    sink_(std::move(r));
  }

 private:
  const RecordSink& sink_;
  LoadReport& report_;
  std::unordered_set<std::string> ids_;
};

inline std::string string_field(const Json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it != j.end() && !it->is_null()) {
      return it->is_string() ? it->get<std::string>() : it->dump();
    }
  }
  return {};
}

inline const Json* array_field(const Json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it != j.end() && it->is_array()) return &*it;
  }
  return nullptr;
}

inline std::vector<ProductRecord> collect(const std::function<void(const RecordSink&)>& loader) {
  std::vector<ProductRecord> out;
  loader([&](ProductRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

}  // namespace detail

inline bool is_null_sentinel(std::string_view value) {
  auto v = text::trim(value);
  return v.empty() || text::to_lower(v) == "null";
}

/// Tab-separated (title, attribute, value[, category]) triples. Rows with a
/// NULL value are dropped, then rows sharing a title merge into one record.
inline std::vector<ProductRecord> load_ae110k(const std::filesystem::path& path, LoadReport& report) {
  std::vector<ProductRecord> records;
  std::unordered_map<std::string, std::size_t> by_title;
  std::vector<std::size_t> first_line;
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    ++report.lines;
    auto cols = text::split(line, "\t");
    if (cols.size() != 3 && cols.size() != 4) {
      ++report.malformed_lines;
      report.note(n, "expected 3 or 4 tab-separated columns, got " + std::to_string(cols.size()));
      return;
    }
    if (is_null_sentinel(cols[2])) {
      ++report.null_values;
      return;
    }
    std::string title(text::trim(cols[0]));
    auto [it, inserted] = by_title.try_emplace(title, records.size());
    if (inserted) {
      ProductRecord r;
      r.text = title;
      r.category = cols.size() == 4 && !text::trim(cols[3]).empty() ? std::string(text::trim(cols[3]))
                                                                      : std::string(kDefaultCategory);
      records.push_back(std::move(r));
      first_line.push_back(n);
    }
    records[it->second].pairs.push_back({std::string(cols[1]), std::string(cols[2])});
  });

  std::vector<ProductRecord> out;
  RecordSink sink = [&](ProductRecord&& r) { out.push_back(std::move(r)); };
  detail::RecordGate gate(sink, report);
  char id[32];
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::snprintf(id, sizeof id, "ae110k-%07zu", i);
    records[i].id = id;
    gate.emit(std::move(records[i]), first_line[i]);
  }
  return out;
}

/// One JSON object per line. Accepted field aliases: id|asin,
/// text|title, pairs|attributes|entities; pair entries are objects with
/// attribute|label|key and value, `[value, attribute]` arrays, or
/// `[begin, end, attribute]` character spans into the text.
inline void load_oamine(const std::filesystem::path& path, const RecordSink& sink, LoadReport& report) {
  detail::RecordGate gate(sink, report);
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    ++report.lines;
    try {
      Json j = Json::parse(line);
      ProductRecord r;
      r.id = detail::string_field(j, {"id", "asin"});
      if (r.id.empty()) r.id = "oamine-" + std::to_string(n);
      r.category = detail::string_field(j, {"category"});
      if (r.category.empty()) r.category = kDefaultCategory;
      r.text = detail::string_field(j, {"text", "title"});
      const Json* entries = detail::array_field(j, {"pairs", "attributes", "entities"});
      if (!entries) throw std::invalid_argument("no pairs/attributes/entities array");
      for (const auto& e : *entries) {
        if (e.is_object()) {
          r.pairs.push_back({detail::string_field(e, {"attribute", "label", "key"}),
                             detail::string_field(e, {"value"})});
        } else if (e.is_array() && e.size() == 3 && e[0].is_number_integer()) {
          auto b = e[0].get<std::size_t>(), en = e[1].get<std::size_t>();
          if (b > en || en > r.text.size()) throw std::out_of_range("span outside text");
          r.pairs.push_back({e[2].get<std::string>(), r.text.substr(b, en - b)});
        } else if (e.is_array() && e.size() == 2) {
          r.pairs.push_back({e[1].get<std::string>(), e[0].get<std::string>()});
        } else {
          throw std::invalid_argument("unrecognised pair entry");
        }
      }
      gate.emit(std::move(r), n);
    } catch (const std::exception& e) {
      ++report.malformed_lines;
      report.note(n, e.what());
    }
  });
}

inline std::vector<ProductRecord> load_oamine(const std::filesystem::path& path, LoadReport& report) {
  return detail::collect([&](const RecordSink& s) { load_oamine(path, s, report); });
}

/// MAVE records: paragraphs are joined into the text; each attribute entry
/// contributes the verbatim text of its first evidence span. Entries with
/// no spans (negatives) are dropped, as are records left without pairs.
inline void load_mave(const std::filesystem::path& path, const RecordSink& sink, LoadReport& report) {
  detail::RecordGate gate(sink, report);
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    ++report.lines;
    try {
      Json j = Json::parse(line);
      ProductRecord r;
      r.id = detail::string_field(j, {"id"});
      if (r.id.empty()) r.id = "mave-" + std::to_string(n);
      r.category = detail::string_field(j, {"category"});
      if (r.category.empty()) r.category = kDefaultCategory;
      if (const Json* paragraphs = detail::array_field(j, {"paragraphs"})) {
        std::vector<std::string> texts;
        for (const auto& p : *paragraphs) texts.push_back(p.at("text").get<std::string>());
        r.text = text::join(texts, " ");
      } else {
        r.text = detail::string_field(j, {"text", "title"});
      }
      const Json* attributes = detail::array_field(j, {"attributes"});
      if (!attributes) throw std::invalid_argument("no attributes array");
      for (const auto& a : *attributes) {
        const Json* evidences = detail::array_field(a, {"evidences"});
        if (!evidences || evidences->empty()) {
          ++report.negative_entries;
          continue;
        }
        r.pairs.push_back({a.at("key").get<std::string>(), evidences->front().at("value").get<std::string>()});
      }
      gate.emit(std::move(r), n);
    } catch (const std::exception& e) {
      ++report.malformed_lines;
      report.note(n, e.what());
    }
  });
}

inline std::vector<ProductRecord> load_mave(const std::filesystem::path& path, LoadReport& report) {
  return detail::collect([&](const RecordSink& s) { load_mave(path, s, report); });
}

inline void load_canonical(const std::filesystem::path& path, const RecordSink& sink, LoadReport& report) {
  detail::RecordGate gate(sink, report);
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    ++report.lines;
    try {
      gate.emit(record_from_json(Json::parse(line)), n);
    } catch (const std::exception& e) {
      ++report.malformed_lines;
      report.note(n, e.what());
    }
  });
}

inline std::vector<ProductRecord> load_canonical(const std::filesystem::path& path, LoadReport& report) {
  return detail::collect([&](const RecordSink& s) { load_canonical(path, s, report); });
}

inline std::vector<ProductRecord> load_corpus(CorpusFormat format, const std::filesystem::path& path,
                                              LoadReport& report) {
  switch (format) {
    case CorpusFormat::AE110K: return load_ae110k(path, report);
    case CorpusFormat::OAMine: return load_oamine(path, report);
    case CorpusFormat::MAVE: return load_mave(path, report);
    case CorpusFormat::Canonical: return load_canonical(path, report);
  }
  throw UsageError("unknown corpus format");
}

// ---------------------------------------------------------------------------
// Splitting

using SplitRatios = std::array<double, 3>;

inline SplitRatios parse_ratios(std::string_view spec) {
  auto parts = text::split(spec, ":");
  if (parts.size() != 3) throw UsageError("ratios must look like a:b:c");
  SplitRatios r{};
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    try {
      r[i] = std::stod(std::string(parts[i]));
    } catch (const std::exception&) {
      throw UsageError("bad ratio '" + std::string(parts[i]) + "'");
    }
    if (!(r[i] >= 0)) throw UsageError("ratios must be non-negative");
    sum += r[i];
  }
  // Integer weights such as 8:1:1 are scaled; fractions must already sum to 1.
  if (sum > 1.0 + 1e-9 && std::all_of(r.begin(), r.end(), [](double x) { return x == std::floor(x); })) {
    for (double& x : r) x /= sum;
  }
  return r;
}

inline void validate_ratios(const SplitRatios& r) {
  double sum = r[0] + r[1] + r[2];
  if (std::any_of(r.begin(), r.end(), [](double x) { return !(x >= 0); }) || std::abs(sum - 1.0) > 1e-9) {
    throw UsageError("split ratios must be non-negative and sum to 1");
  }
}

struct CategorySplit {
  std::size_t total = 0;
  std::array<std::size_t, 3> counts{};
  bool too_small = false;
};

struct DatasetSplit {
  std::vector<ProductRecord> train, val, test;
  std::uint64_t seed = 0;
  SplitRatios ratios{};
  std::map<std::string, CategorySplit> categories;
};

/// Partition sizes by largest-remainder rounding; ties go to the earlier part.
inline std::array<std::size_t, 3> largest_remainder(std::size_t n, const SplitRatios& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = static_cast<double>(n) * ratios[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainders[a] > remainders[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

/// Per-category shuffle then largest-remainder partition. Input order does
/// not matter: each stratum is sorted by id before shuffling.
inline DatasetSplit stratified_split(std::vector<ProductRecord> records, const SplitRatios& ratios,
                                     std::uint64_t seed) {
  validate_ratios(ratios);
  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;

  std::map<std::string, std::vector<ProductRecord>> strata;
  for (auto& r : records) {
    if (r.category.empty()) throw UsageError("record '" + r.id + "' has no category");
    strata[r.category].push_back(std::move(r));
  }
  std::mt19937_64 rng(seed);
  for (auto& [category, members] : strata) {
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    seeded_shuffle(members, rng);
    CategorySplit& info = split.categories[category];
    info.total = members.size();
    if (members.size() < 3) {
      info.too_small = true;
      info.counts = {members.size(), 0, 0};
    } else {
      info.counts = largest_remainder(members.size(), ratios);
    }
    std::size_t i = 0;
    std::array<std::vector<ProductRecord>*, 3> parts{&split.train, &split.val, &split.test};
    for (int part = 0; part < 3; ++part) {
      for (std::size_t k = 0; k < info.counts[part]; ++k) parts[part]->push_back(std::move(members[i++]));
    }
  }
  return split;
}

inline Json split_report_json(const DatasetSplit& s) {
  Json categories = Json::object();
  for (const auto& [name, c] : s.categories) {
    categories[name] = Json{{"total", c.total},
                            {"train", c.counts[0]},
                            {"val", c.counts[1]},
                            {"test", c.counts[2]},
                            {"too_small", c.too_small}};
  }
  return Json{{"seed", s.seed},
              {"ratios", s.ratios},
              {"train", s.train.size()},
              {"val", s.val.size()},
              {"test", s.test.size()},
              {"categories", std::move(categories)}};
}

// ---------------------------------------------------------------------------
// Statistics

struct DatasetStats {
  std::size_t n_products = 0;
  std::size_t n_pairs = 0;
  std::size_t n_categories = 0;
  std::size_t n_unique_attributes = 0;
  std::size_t n_unique_values = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

inline DatasetStats compute_stats(const std::vector<ProductRecord>& records) {
  DatasetStats s;
  std::set<std::string> categories, attributes, values;
  for (const auto& r : records) {
    ++s.n_products;
    categories.insert(r.category);
    for (const auto& p : r.pairs) {
      ++s.n_pairs;
      auto n = normalize_pair(p);
      attributes.insert(std::move(n.attribute));
      values.insert(std::move(n.value));
    }
  }
  s.n_categories = categories.size();
  s.n_unique_attributes = attributes.size();
  s.n_unique_values = values.size();
  return s;
}

inline Json to_json(const DatasetStats& s) {
  return Json{{"n_products", s.n_products},
              {"n_pairs", s.n_pairs},
              {"n_categories", s.n_categories},
              {"n_unique_attributes", s.n_unique_attributes},
              {"n_unique_values", s.n_unique_values}};
}

/// Published corpus sizes, used as an advisory check after loading.
inline std::optional<DatasetStats> reference_stats(CorpusFormat f) {
  switch (f) {
    case CorpusFormat::AE110K: return DatasetStats{39505, 88915, 10, 2045, 10977};
    case CorpusFormat::OAMine: return DatasetStats{1943, 11008, 10, 51, 5201};
    case CorpusFormat::MAVE: return DatasetStats{2226509, 2987151, 1257, 705, 79199};
    case CorpusFormat::Canonical: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace avgen

#endif  // AVGEN_INGEST_HPP_
