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

#include "avgen/ingest.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

namespace avgen {
namespace {

using testing::TempDir;

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream(p, std::ios::binary) << content;
}

TEST(LoadAE110K, NullRowIsDropped) {
  TempDir dir("ae");
  write_file(dir / "a.tsv", "T\tBrand\tNULL\n");
  LoadReport report;
  EXPECT_TRUE(load_ae110k(dir / "a.tsv", report).empty());
  EXPECT_EQ(report.null_values, 1u);
}

TEST(LoadAE110K, MergesByTitle) {
  TempDir dir("ae");
  write_file(dir / "a.tsv",
             "Fossil watch brown\tBrand\tFossil\n"
             "Fossil watch brown\tColor\tbrown\n"
             "Other thing\tBrand\tnull\n"
             "Other thing\tColor\t\n"
             "broken row\n"
             "Third\tSize\tXL\tapparel\n");
  LoadReport report;
  auto records = load_ae110k(dir / "a.tsv", report);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].text, "Fossil watch brown");
  EXPECT_EQ(records[0].pairs.size(), 2u);
  EXPECT_EQ(records[0].category, kDefaultCategory);
  EXPECT_EQ(records[1].category, "apparel");
  EXPECT_EQ(report.null_values, 2u);
  EXPECT_EQ(report.malformed_lines, 1u);
  for (const auto& r : records) {
    for (const auto& p : r.pairs) EXPECT_FALSE(is_null_sentinel(p.value));
  }
}

TEST(LoadAE110K, UnreadableFileIsFatal) {
  LoadReport report;
  EXPECT_THROW(load_ae110k("/nonexistent/file.tsv", report), InputError);
}

TEST(LoadOAMine, EmptyFile) {
  TempDir dir("oa");
  write_file(dir / "o.jsonl", "");
  LoadReport report;
  EXPECT_TRUE(load_oamine(dir / "o.jsonl", report).empty());
}

TEST(LoadOAMine, FieldMappingAndMalformedLines) {
  TempDir dir("oa");
  write_file(dir / "o.jsonl",
             R"({"asin":"B1","category":"coffee","title":"Lola Savannah ground coffee bag","entities":[{"label":"Brand","value":"Lola Savannah"},["Ground","Type"],[28,31,"Container"]]})"
             "\n{not json}\n"
             R"({"id":"B2","category":"tea","text":"green tea","pairs":[{"attribute":"Type","value":"green"}]})"
             "\n");
  LoadReport report;
  auto records = load_oamine(dir / "o.jsonl", report);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].id, "B1");
  ASSERT_EQ(records[0].pairs.size(), 3u);
  EXPECT_EQ(records[0].pairs[1], (AttrValuePair{"Type", "Ground"}));
  EXPECT_EQ(records[0].pairs[2], (AttrValuePair{"Container", "bag"}));
  EXPECT_EQ(report.malformed_lines, 1u);
  EXPECT_EQ(report.issues.size(), 1u);
}

TEST(LoadMAVE, NegativesDropped) {
  TempDir dir("mave");
  write_file(dir / "m.jsonl",
             R"({"id":"m1","category":"Handbags","paragraphs":[{"text":"Red leather handbag","source":"title"},{"text":"for women","source":"description"}],)"
             R"("attributes":[{"key":"Color","evidences":[{"value":"Red","pid":0,"begin":0,"end":3},{"value":"red","pid":0,"begin":0,"end":3}]},)"
             R"({"key":"Material","evidences":[{"value":"leather","pid":0,"begin":4,"end":11}]},{"key":"Size","evidences":[]}]})"
             "\n"
             R"({"id":"m2","category":"Handbags","paragraphs":[{"text":"Tote","source":"title"}],"attributes":[{"key":"Size","evidences":[]}]})"
             "\n");
  LoadReport report;
  auto records = load_mave(dir / "m.jsonl", report);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].text, "Red leather handbag for women");
  EXPECT_EQ(records[0].pairs, (std::vector<AttrValuePair>{{"Color", "Red"}, {"Material", "leather"}}));
  EXPECT_EQ(report.negative_entries, 2u);
  EXPECT_EQ(report.empty_records, 1u);
}

TEST(LoadCanonical, DuplicateIdsKeepFirst) {
  TempDir dir("canon");
  write_file(dir / "c.jsonl",
             R"({"id":"a","category":"c","text":"one","pairs":[{"attribute":"A","value":"one"}]})"
             "\n"
             R"({"id":"a","category":"c","text":"two","pairs":[{"attribute":"A","value":"two"}]})"
             "\n");
  LoadReport report;
  auto records = load_canonical(dir / "c.jsonl", report);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].text, "one");
  EXPECT_EQ(report.duplicate_ids, 1u);
}

TEST(LoadCanonical, RoundTripsWrittenRecords) {
  TempDir dir("canon");
  auto records = testing::synthetic_corpus(50, 11);
  write_records(dir / "r.jsonl", records);
  LoadReport report;
  EXPECT_EQ(load_canonical(dir / "r.jsonl", report), records);
}

TEST(LoadCanonical, DuplicatePairsRemovedUnderNormalization) {
  TempDir dir("canon");
  write_file(dir / "c.jsonl",
             R"({"id":"a","category":"c","text":"Brown bag","pairs":[{"attribute":"Color","value":"Brown"},{"attribute":"color ","value":"brown."}]})"
             "\n");
  LoadReport report;
  auto records = load_canonical(dir / "c.jsonl", report);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].pairs.size(), 1u);
  EXPECT_EQ(report.duplicate_pairs, 1u);
}

TEST(ParseFormat, Unknown) { EXPECT_THROW(parse_format("csv"), UsageError); }

TEST(Ratios, ParseAndValidate) {
  auto r = parse_ratios("8:1:1");
  EXPECT_DOUBLE_EQ(r[0], 0.8);
  EXPECT_DOUBLE_EQ(r[1], 0.1);
  auto f = parse_ratios("0.8:0.1:0.1");
  EXPECT_DOUBLE_EQ(f[2], 0.1);
  EXPECT_THROW(validate_ratios(parse_ratios("0.5:0.1:0.1")), UsageError);
  EXPECT_THROW(parse_ratios("8:1"), UsageError);
}

TEST(LargestRemainder, NineRecords) {
  // 9 * (0.8, 0.1, 0.1) = (7.2, 0.9, 0.9): floors (7, 0, 0), two leftover
  // records go to the two largest remainders (val, test).
  EXPECT_EQ(largest_remainder(9, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{7, 1, 1}));
  EXPECT_EQ(largest_remainder(10, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{8, 1, 1}));
  EXPECT_EQ(largest_remainder(0, {0.8, 0.1, 0.1}), (std::array<std::size_t, 3>{0, 0, 0}));
}

std::vector<ProductRecord> categories_of(std::vector<std::size_t> sizes) {
  std::vector<ProductRecord> out;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i) {
      out.push_back({"c" + std::to_string(c) + "-" + std::to_string(i), "cat" + std::to_string(c), "t", {{"a", "t"}}});
    }
  }
  return out;
}

TEST(StratifiedSplit, ExactDivisibility) {
  auto split = stratified_split(categories_of({10, 10}), {0.8, 0.1, 0.1}, 5);
  EXPECT_EQ(split.train.size(), 16u);
  EXPECT_EQ(split.val.size(), 2u);
  EXPECT_EQ(split.test.size(), 2u);
  for (const auto& [name, c] : split.categories) EXPECT_EQ(c.counts, (std::array<std::size_t, 3>{8, 1, 1}));
}

TEST(StratifiedSplit, NineRecordsOneCategory) {
  auto split = stratified_split(categories_of({9}), {0.8, 0.1, 0.1}, 1);
  EXPECT_EQ(split.train.size(), 7u);
  EXPECT_EQ(split.val.size(), 1u);
  EXPECT_EQ(split.test.size(), 1u);
}

TEST(StratifiedSplit, SmallCategoryGoesToTrain) {
  auto split = stratified_split(categories_of({2, 10}), {0.8, 0.1, 0.1}, 1);
  EXPECT_TRUE(split.categories.at("cat0").too_small);
  EXPECT_EQ(split.categories.at("cat0").counts[0], 2u);
  EXPECT_EQ(split.train.size(), 10u);
}

TEST(StratifiedSplit, InvalidRatios) {
  EXPECT_THROW(stratified_split(categories_of({5}), {0.5, 0.5, 0.5}, 1), UsageError);
}

std::vector<std::string> ids(const std::vector<ProductRecord>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.id);
  return out;
}

TEST(StratifiedSplit, DeterministicAndOrderIndependent) {
  auto records = testing::synthetic_corpus(300, 3, 7);
  auto a = stratified_split(records, {0.8, 0.1, 0.1}, 42);
  std::reverse(records.begin(), records.end());
  auto b = stratified_split(records, {0.8, 0.1, 0.1}, 42);
  EXPECT_EQ(ids(a.train), ids(b.train));
  EXPECT_EQ(ids(a.val), ids(b.val));
  EXPECT_EQ(ids(a.test), ids(b.test));
  auto c = stratified_split(records, {0.8, 0.1, 0.1}, 43);
  EXPECT_NE(ids(a.train), ids(c.train));
}

// Property: partition by id and per-stratum fidelity over random inputs.
TEST(StratifiedSplit, PartitionAndFidelityProperty) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> ncat(1, 6), size(0, 40);
    std::vector<std::size_t> sizes;
    for (std::size_t c = 0, n = ncat(rng); c < n; ++c) sizes.push_back(size(rng));
    auto records = categories_of(sizes);
    double a = std::uniform_real_distribution<double>(0.3, 0.9)(rng);
    double b = std::uniform_real_distribution<double>(0.0, 1.0 - a)(rng);
    SplitRatios ratios{a, b, 1.0 - a - b};
    auto split = stratified_split(records, ratios, rng());

    std::multiset<std::string> all;
    for (auto* part : {&split.train, &split.val, &split.test}) {
      for (const auto& r : *part) all.insert(r.id);
    }
    std::multiset<std::string> expected;
    for (const auto& r : records) expected.insert(r.id);
    ASSERT_EQ(all, expected);

    for (const auto& [name, c] : split.categories) {
      if (c.total < 10) continue;
      for (int k = 0; k < 3; ++k) {
        double frac = static_cast<double>(c.counts[k]) / static_cast<double>(c.total);
        EXPECT_LE(std::abs(frac - ratios[k]), 1.0 / static_cast<double>(c.total) + 1e-12);
      }
    }
  }
}

TEST(ComputeStats, EmptyAndFigure1) {
  EXPECT_EQ(compute_stats({}), DatasetStats{});
  auto s = compute_stats({testing::figure1_record()});
  EXPECT_EQ(s.n_products, 1u);
  EXPECT_EQ(s.n_pairs, 3u);
  EXPECT_EQ(s.n_unique_attributes, 3u);
  EXPECT_EQ(s.n_unique_values, 3u);
  EXPECT_EQ(s.n_categories, 1u);
}

TEST(ComputeStats, UniquenessUsesNormalization) {
  std::vector<ProductRecord> rs{{"a", "x", "t", {{"Brand", "Fossil"}}}, {"b", "y", "t", {{"brand ", "FOSSIL."}}}};
  auto s = compute_stats(rs);
  EXPECT_EQ(s.n_pairs, 2u);
  EXPECT_EQ(s.n_unique_attributes, 1u);
  EXPECT_EQ(s.n_unique_values, 1u);
  EXPECT_LE(s.n_unique_attributes, s.n_pairs);
}

TEST(ReferenceStats, PublishedCorpusSizes) {
  EXPECT_EQ(reference_stats(CorpusFormat::AE110K)->n_products, 39505u);
  EXPECT_EQ(reference_stats(CorpusFormat::AE110K)->n_unique_attributes, 2045u);
  EXPECT_EQ(reference_stats(CorpusFormat::AE110K)->n_unique_values, 10977u);
  EXPECT_EQ(reference_stats(CorpusFormat::OAMine)->n_products, 1943u);
  EXPECT_EQ(reference_stats(CorpusFormat::OAMine)->n_categories, 10u);
  EXPECT_EQ(reference_stats(CorpusFormat::OAMine)->n_pairs, 11008u);
  EXPECT_EQ(reference_stats(CorpusFormat::MAVE)->n_pairs, 2987151u);
  EXPECT_EQ(reference_stats(CorpusFormat::MAVE)->n_unique_attributes, 705u);
}

}  // namespace
}  // namespace avgen
