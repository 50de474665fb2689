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

#include "avgen/backend.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "avgen/external_backend.hpp"
#include "test_support.hpp"

namespace avgen {
namespace {

std::vector<TaskExample> toy_examples() {
  return {{"red cotton shirt", "attribute: Color, value: red", Task::E2E},
          {"blue denim jeans", "attribute: Color, value: blue", Task::E2E},
          {"steel water bottle", "attribute: Material, value: steel", Task::E2E}};
}

BackendConfig mock_config() {
  BackendConfig c = default_config(kMockModelId, ModelRole::End2End);
  c.epochs = 4;
  c.batch_size = 2;
  return c;
}

TEST(PublishedHyperParams, SpotChecks) {
  EXPECT_EQ(published_hyperparams("t5-large", ModelRole::End2End), (HyperParams{8, 1e-4, 64}));
  EXPECT_EQ(published_hyperparams("t5-small", ModelRole::Multitask), (HyperParams{16, 5e-4, 256}));
  EXPECT_EQ(published_hyperparams("bart-base", ModelRole::PipelineAG), (HyperParams{4, 1e-4, 128}));
  EXPECT_EQ(published_hyperparams("facebook/bart-large", ModelRole::Multitask), (HyperParams{3, 1e-5, 64}));
  EXPECT_FALSE(published_hyperparams("gpt2", ModelRole::End2End));
}

TEST(DefaultConfig, LengthsAndPatience) {
  auto e2e = default_config("t5-base", ModelRole::End2End);
  EXPECT_EQ(e2e.max_input_tokens, 512u);
  EXPECT_EQ(e2e.max_output_tokens, 256u);
  EXPECT_EQ(e2e.early_stop_patience, 3u);
  EXPECT_EQ(e2e.beam_width, 1u);
  EXPECT_EQ(default_config("t5-base", ModelRole::PipelineVE).max_output_tokens, 64u);
  EXPECT_EQ(default_config("t5-base", ModelRole::Multitask).max_output_tokens, 64u);
}

TEST(ResolveConfig, OverridesWin) {
  ConfigOverrides o;
  o.epochs = 2;
  o.learning_rate = 3e-4;
  auto c = resolve_config("t5-large", ModelRole::End2End, o);
  EXPECT_EQ(c.epochs, 2u);
  EXPECT_DOUBLE_EQ(c.learning_rate, 3e-4);
  EXPECT_EQ(c.batch_size, 64u);
  o.batch_size = 0;
  EXPECT_THROW(resolve_config("t5-large", ModelRole::End2End, o), ConfigError);
}

TEST(DecodeMode, Parse) {
  EXPECT_EQ(parse_decode_mode("greedy"), 1u);
  EXPECT_EQ(parse_decode_mode("beam:4"), 4u);
  EXPECT_THROW(parse_decode_mode("beam:0"), UsageError);
  EXPECT_THROW(parse_decode_mode("sample"), UsageError);
}

TEST(EarlyStopping, StopsAfterPatience) {
  EarlyStopping s(3);
  EXPECT_FALSE(s.update(1.0));
  EXPECT_FALSE(s.update(0.5));
  EXPECT_FALSE(s.update(0.6));
  EXPECT_FALSE(s.update(0.5));
  EXPECT_TRUE(s.update(0.7));
  EXPECT_DOUBLE_EQ(s.best(), 0.5);
}

TEST(BatchSchedule, CoversPoolOnce) {
  std::mt19937_64 rng(1);
  auto batches = batch_schedule(10, 3, rng);
  ASSERT_EQ(batches.size(), 4u);
  EXPECT_EQ(batches.back().size(), 1u);
  std::vector<std::size_t> all;
  for (auto& b : batches) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
  std::mt19937_64 same(1);
  EXPECT_EQ(batch_schedule(10, 3, same), batches);
}

TEST(TruncateTokens, Whitespace) {
  bool truncated = false;
  EXPECT_EQ(truncate_tokens("a  b c", 2, &truncated), "a b");
  EXPECT_TRUE(truncated);
  EXPECT_EQ(truncate_tokens("a  b", 2, &truncated), "a  b");
  EXPECT_FALSE(truncated);
}

TEST(MockModel, Memorizes) {
  auto ex = toy_examples();
  auto model = MockModel::train(ex, mock_config(), {});
  std::vector<std::string> sources;
  for (const auto& e : ex) sources.push_back(e.source);
  auto out = model->generate(sources);
  ASSERT_EQ(out.size(), ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i) EXPECT_EQ(out[i], ex[i].target);
}

TEST(MockModel, UnseenSourceYieldsEmpty) {
  auto model = MockModel::train(toy_examples(), mock_config(), {});
  std::vector<std::string> sources{"never seen", "red cotton shirt"};
  auto out = model->generate(sources);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], "");
  EXPECT_EQ(out[1], "attribute: Color, value: red");
}

TEST(MockModel, FingerprintDeterministic) {
  auto a = MockModel::train(toy_examples(), mock_config(), {});
  auto b = MockModel::train(toy_examples(), mock_config(), {});
  EXPECT_EQ(a->fingerprint(), b->fingerprint());
  auto c = mock_config();
  c.seed = 9;
  EXPECT_NE(MockModel::train(toy_examples(), c, {})->fingerprint(), a->fingerprint());
}

TEST(MockModel, EarlyStopsOnFlatValidationLoss) {
  auto ex = toy_examples();
  auto c = mock_config();
  c.epochs = 10;
  c.early_stop_patience = 3;
  auto model = MockModel::train(ex, c, ex);
  // Loss reaches 0 after the first epoch and never improves again.
  EXPECT_EQ(model->report().epochs_completed, 4u);
  EXPECT_TRUE(model->report().stopped_early);
  EXPECT_LE(model->report().epochs_completed, c.epochs);
  EXPECT_DOUBLE_EQ(model->report().val_losses.front(), 0.0);
}

TEST(MockModel, EpochBoundWithoutValidation) {
  auto c = mock_config();
  c.epochs = 3;
  EXPECT_EQ(MockModel::train(toy_examples(), c, {})->report().epochs_completed, 3u);
}

TEST(MockModel, TruncatesLongSourcesAndOutputs) {
  auto c = mock_config();
  c.max_input_tokens = 2;
  c.max_output_tokens = 3;
  auto model = MockModel::train(toy_examples(), c, {});
  EXPECT_EQ(model->report().truncated_sources, 3u);
  std::vector<std::string> src{"red cotton anything"};
  EXPECT_EQ(model->generate(src)[0], "attribute: Color, value:");
}

TEST(MockModel, Errors) {
  EXPECT_THROW(MockModel::train({}, mock_config(), {}), ConfigError);
  auto c = mock_config();
  c.special_tokens.clear();
  std::vector<TaskExample> hl{{"a <hl> b <hl>", "x", Task::AG}};
  EXPECT_THROW(MockModel::train(hl, c, {}), ConfigError);
}

TEST(MockModel, ConflictingTargetsCountedFirstWins) {
  std::vector<TaskExample> ex{{"same", "one", Task::AG}, {"same", "two", Task::AG}};
  auto c = mock_config();
  c.batch_size = 1;
  auto model = MockModel::train(ex, c, {});
  EXPECT_EQ(model->report().conflicting_targets, 1u);
  EXPECT_EQ(model->memorized(), 1u);
}

TEST(MockModel, SaveLoadRoundTrip) {
  testing::TempDir dir("mock");
  auto ex = toy_examples();
  auto model = MockModel::train(ex, mock_config(), ex);
  model->save(dir.path());
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  auto loaded = load_model(dir.path());
  EXPECT_EQ(loaded->fingerprint(), model->fingerprint());
  EXPECT_EQ(loaded->config(), model->config());
  EXPECT_EQ(loaded->report().epochs_completed, model->report().epochs_completed);
  std::vector<std::string> sources{ex[1].source, "unseen"};
  EXPECT_EQ(loaded->generate(sources), model->generate(sources));
}

TEST(MockModel, ConcurrentGenerationIsSafe) {
  auto ex = testing::synthetic_corpus(200, 5);
  std::vector<TaskExample> examples;
  for (const auto& r : ex) examples.push_back({r.text, render_pairs(r.pairs), Task::E2E});
  auto model = MockModel::train(examples, mock_config(), {});
  std::vector<std::string> sources;
  for (const auto& e : examples) sources.push_back(e.source);
  std::vector<std::vector<std::string>> results(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) threads.emplace_back([&, t] { results[t] = model->generate(sources); });
  for (auto& th : threads) th.join();
  for (const auto& r : results) EXPECT_EQ(r, results[0]);
}

TEST(CostProbe, PositiveTimings) {
  auto ex = toy_examples();
  auto model = MockModel::train(ex, mock_config(), {});
  auto cost = cost_probe(*model, ex);
  EXPECT_GT(cost.train_seconds, 0.0);
  EXPECT_GT(cost.infer_seconds_per_1k, 0.0);
  EXPECT_EQ(cost.generations, ex.size());
  EXPECT_EQ(cost.parameter_count, MockModel::kParameterCount);
}

TEST(LoadModel, UnknownBackend) {
  testing::TempDir dir("bad");
  write_json(dir / "manifest.json", Json{{"backend", "quantum"}});
  EXPECT_THROW(load_model(dir.path()), InputError);
}

}  // namespace
}  // namespace avgen
