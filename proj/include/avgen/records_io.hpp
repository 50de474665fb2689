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

// Canonical line-delimited record format:
//   {"id": str, "category": str, "text": str,
//    "pairs": [{"attribute": str, "value": str}, ...]}

#ifndef AVGEN_RECORDS_IO_HPP_
#define AVGEN_RECORDS_IO_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avgen/types.hpp"

namespace avgen {

using Json = nlohmann::ordered_json;

inline Json to_json(const AttrValuePair& p) {
  return Json{{"attribute", p.attribute}, {"value", p.value}};
}

inline Json to_json(const std::vector<AttrValuePair>& pairs) {
  Json arr = Json::array();
  for (const auto& p : pairs) arr.push_back(to_json(p));
  return arr;
}

inline Json to_json(const ProductRecord& r) {
  return Json{{"id", r.id}, {"category", r.category}, {"text", r.text}, {"pairs", to_json(r.pairs)}};
}

inline AttrValuePair pair_from_json(const Json& j) {
  return {j.at("attribute").get<std::string>(), j.at("value").get<std::string>()};
}

inline std::vector<AttrValuePair> pairs_from_json(const Json& j) {
  std::vector<AttrValuePair> pairs;
  for (const auto& p : j) pairs.push_back(pair_from_json(p));
  return pairs;
}

/// Throws nlohmann::json exceptions on schema violations.
inline ProductRecord record_from_json(const Json& j) {
  ProductRecord r;
  r.id = j.at("id").get<std::string>();
  r.category = j.value("category", std::string{});
  r.text = j.at("text").get<std::string>();
  r.pairs = pairs_from_json(j.at("pairs"));
  return r;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

/// Calls `fn(line_number, line)` for every non-blank line (1-based numbers).
inline void for_each_line(const std::filesystem::path& path,
                          const std::function<void(std::size_t, const std::string&)>& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    fn(n, line);
  }
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows) {
  auto out = open_output(path);
  for (const auto& row : rows) out << row.dump() << '\n';
}

inline void write_records(const std::filesystem::path& path, const std::vector<ProductRecord>& records) {
  auto out = open_output(path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline void write_json(const std::filesystem::path& path, const Json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

inline Json read_json(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace avgen

#endif  // AVGEN_RECORDS_IO_HPP_
