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

// Drives the built command-line tool end to end on small synthetic data.

#include <sys/wait.h>

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

namespace avgen {
namespace {

namespace fs = std::filesystem;

std::string quote(const std::string& s) { return "'" + s + "'"; }

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = quote(AVGEN_CLI_PATH) + " " + args + " >" + quote(log.string()) + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json trained_event(const fs::path& dir) {
  std::istringstream lines(slurp(dir / "avgen.log.jsonl"));
  std::string line;
  while (std::getline(lines, line)) {
    auto j = Json::parse(line);
    if (j.at("event") == "trained") return j;
  }
  return Json();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = dir_ / "corpus.jsonl";
    write_records(corpus_, testing::synthetic_corpus(60, 3, 3));
  }
  int run(const std::string& args) { return run_cli(args, dir_ / "stdout.txt"); }
  std::string path(const std::string& name) const { return quote((dir_ / name).string()); }
  void prepare(const std::string& name, const fs::path& corpus) {
    ASSERT_EQ(run("prepare --format canonical --in " + quote(corpus.string()) + " --out " + path(name)), 0)
        << slurp(dir_ / "stdout.txt");
  }

  testing::TempDir dir_{"cli"};
  fs::path corpus_;
};

TEST_F(CliTest, PrepareWritesSplitsDeterministically) {
  prepare("a", corpus_);
  prepare("b", corpus_);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f));
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir_ / "a" / "split_report.json"));
  EXPECT_EQ(read_json(dir_ / "a" / "run.json").at("seed").get<std::uint64_t>(), 0u);

  ASSERT_EQ(run("--seed 5 prepare --format canonical --in " + path("corpus.jsonl") + " --out " + path("c")), 0);
  EXPECT_NE(slurp(dir_ / "a" / "train.jsonl"), slurp(dir_ / "c" / "train.jsonl"));
  EXPECT_EQ(read_json(dir_ / "c" / "run.json").at("seed").get<std::uint64_t>(), 5u);
}

TEST_F(CliTest, PrepareUsageErrors) {
  EXPECT_EQ(run("prepare --format nosuch --in " + path("corpus.jsonl") + " --out " + path("x")), 2);
  EXPECT_EQ(run("prepare --format canonical --ratios 8:1 --in " + path("corpus.jsonl") + " --out " + path("x")), 2);
  EXPECT_EQ(run("prepare --format canonical --ratios 0:0:0 --in " + path("corpus.jsonl") + " --out " + path("x")), 2);
  EXPECT_EQ(run("prepare --format canonical --ratios 0.5:0.3:0.1 --in " + path("corpus.jsonl") + " --out " + path("x")), 2);
  EXPECT_NE(run("prepare --format canonical --in " + path("missing.jsonl") + " --out " + path("x")), 0);
  EXPECT_NE(run("nosuchcommand"), 0);
}

TEST_F(CliTest, TrainWritesOneManifestPerModel) {
  prepare("data", corpus_);
  ASSERT_EQ(run("train --strategy pipeline --model mock --data " + path("data") + " --out " + path("pipe")), 0);
  ASSERT_EQ(run("train --strategy end2end --model mock --data " + path("data") + " --out " + path("e2e")), 0);
  auto manifests = [](const fs::path& d) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(d)) n += e.path().filename() == kManifestFile;
    return n;
  };
  EXPECT_EQ(manifests(dir_ / "pipe"), 2u);
  EXPECT_EQ(manifests(dir_ / "e2e"), 1u);
  EXPECT_NE(run("train --strategy end2end --model mock --data " + path("nodata") + " --out " + path("z")), 0);
  EXPECT_EQ(run("train --strategy ensemble --model mock --data " + path("data") + " --out " + path("z")), 2);
}

TEST_F(CliTest, MockRoundTripScoresOneHundred) {
  prepare("data", corpus_);
  for (const char* s : {"pipeline", "multitask", "end2end"}) {
    std::string m = std::string("m-") + s, p = std::string("p-") + s, e = std::string("e-") + s;
    ASSERT_EQ(run("train --strategy " + std::string(s) + " --model mock --train " + path("data/train.jsonl") +
                  " --out " + path(m)),
              0);
    ASSERT_EQ(run("predict --models " + path(m) + " --in " + path("data/train.jsonl") + " --out " + path(p)), 0);
    ASSERT_EQ(run("evaluate --pred " + path(p + "/predictions.jsonl") + " --gold " + path("data/train.jsonl") +
                  " --out " + path(e)),
              0);
    auto report = read_json(dir_ / e / "eval_report.json");
    EXPECT_EQ(report.at("f1").get<double>(), 100.0) << s;
    EXPECT_EQ(report.at("precision").get<double>(), 100.0);
    EXPECT_TRUE(report.contains("fingerprint"));
    auto first = Json::parse(slurp(dir_ / p / "predictions.jsonl").substr(0, slurp(dir_ / p / "predictions.jsonl").find('\n')));
    EXPECT_EQ(first.at("strategy").get<std::string>(), s);
  }

  ASSERT_EQ(run("evaluate --ensemble " + path("p-pipeline/predictions.jsonl") + " " + path("p-end2end/predictions.jsonl") +
                " --gold " + path("data/train.jsonl") + " --out " + path("ens")),
            0);
  EXPECT_EQ(read_json(dir_ / "ens" / "eval_report.json").at("recall").get<double>(), 100.0);

  // Predictions on unseen records abstain; ids must match the gold file.
  ASSERT_EQ(run("predict --models " + path("m-end2end") + " --in " + path("data/test.jsonl") + " --out " + path("pt")), 0);
  EXPECT_EQ(run("evaluate --pred " + path("pt/predictions.jsonl") + " --gold " + path("data/train.jsonl") + " --out " +
                path("bad")),
            1);
  EXPECT_NE(slurp(dir_ / "stdout.txt").find("unknown id"), std::string::npos);
}

TEST_F(CliTest, CrossEvalMatrix) {
  const std::vector<std::string> initials{"abcdefgh", "ijklmnop", "qrstuvwxyz"};
  std::string datasets;
  for (int i = 0; i < 3; ++i) {
    std::string name = "d" + std::to_string(i);
    auto corpus = dir_ / (name + ".jsonl");
    write_records(corpus, testing::synthetic_corpus(30, 50 + i, 3, name + "-", initials[i]));
    prepare(name, corpus);
    ASSERT_EQ(run("train --strategy end2end --model mock --train " + path(name + "/test.jsonl") + " --out " +
                  path(name + "-m")),
              0);
    datasets += " --dataset " + name + " " + path(name + "-m") + " " + path(name + "/test.jsonl");
  }
  ASSERT_EQ(run("crosseval" + datasets + " --out " + path("cross")), 0) << slurp(dir_ / "stdout.txt");
  auto m = read_json(dir_ / "cross" / "crosseval.json");
  EXPECT_EQ(m.at("datasets"), Json({"d0", "d1", "d2"}));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(m.at("f1").at(i).at(j).get<double>(), i == j ? 100.0 : 0.0);
  }
  EXPECT_TRUE(fs::exists(dir_ / "cross" / "crosseval.tsv"));
}

TEST_F(CliTest, ConfigFilePrecedence) {
  prepare("data", corpus_);
  {
    std::ofstream cfg(dir_ / "run.cfg");
    cfg << "# settings\nmodel = mock\nepochs=5\nbatch_size = 7\nseed=9\n";
  }
  ASSERT_EQ(run("--config " + path("run.cfg") + " train --strategy end2end --data " + path("data") + " --out " +
                path("from-file")),
            0)
      << slurp(dir_ / "stdout.txt");
  auto file_cfg = trained_event(dir_ / "from-file").at("config");
  EXPECT_EQ(file_cfg.at("epochs").get<int>(), 5);
  EXPECT_EQ(file_cfg.at("batch_size").get<int>(), 7);
  EXPECT_EQ(read_json(dir_ / "from-file" / "run.json").at("seed").get<int>(), 9);

  ASSERT_EQ(run("--config " + path("run.cfg") + " --seed 3 train --strategy end2end --epochs 2 --data " + path("data") +
                " --out " + path("flags")),
            0);
  auto flag_cfg = trained_event(dir_ / "flags").at("config");
  EXPECT_EQ(flag_cfg.at("epochs").get<int>(), 2);
  EXPECT_EQ(flag_cfg.at("batch_size").get<int>(), 7);
  EXPECT_EQ(read_json(dir_ / "flags" / "run.json").at("seed").get<int>(), 3);

  ASSERT_EQ(run("train --strategy end2end --model mock --data " + path("data") + " --out " + path("defaults")), 0);
  auto def = default_config(kMockModelId, ModelRole::End2End);
  EXPECT_EQ(trained_event(dir_ / "defaults").at("config").at("epochs").get<std::size_t>(), def.epochs);
}

TEST_F(CliTest, CostsReport) {
  prepare("data", corpus_);
  ASSERT_EQ(run("costs --model mock --epochs 1 --data " + path("data") + " --out " + path("costs")), 0)
      << slurp(dir_ / "stdout.txt");
  auto r = read_json(dir_ / "costs" / "cost_report.json");
  for (const auto& row : r.at("rows")) {
    if (row.at("strategy") == "end2end") {
      for (const char* k : {"train", "infer", "memory"}) EXPECT_EQ(row.at("normalized").at(k).get<double>(), 1.0);
    }
    if (row.at("strategy") == "pipeline") {
      EXPECT_EQ(row.at("normalized").at("memory").get<double>(), 2.0);
    }
  }
}

}  // namespace
}  // namespace avgen
