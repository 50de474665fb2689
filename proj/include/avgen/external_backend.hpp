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

// Adapter for pretrained encoder-decoder checkpoints. The work is delegated
// to a runner process (tools/seq2seq_runner.py by default) over a small
// file protocol:
//
//   <runner> train    --workdir W
//       reads  W/config.json, W/train.jsonl, W/val.jsonl
//       writes W/model/ and W/report.json
//   <runner> generate --model M --config C --in S --out O
//       reads one {"source"} object per line of S, writes one {"output"}
//       object per line of O in the same order
//
// The runner is chosen by $AVGEN_SEQ2SEQ_RUNNER and run with $AVGEN_PYTHON
// (default python3). Model ids are passed through untouched.

#ifndef AVGEN_EXTERNAL_BACKEND_HPP_
#define AVGEN_EXTERNAL_BACKEND_HPP_

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "avgen/backend.hpp"
#include "avgen/records_io.hpp"

#ifndef AVGEN_DEFAULT_RUNNER
#define AVGEN_DEFAULT_RUNNER "tools/seq2seq_runner.py"
#endif

namespace avgen {

namespace detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

inline std::string env_or(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? v : fallback;
}

inline void run_runner(const std::vector<std::string>& args, const std::filesystem::path& log) {
  std::string cmd = shell_quote(env_or("AVGEN_PYTHON", "python3")) + " " +
                    shell_quote(env_or("AVGEN_SEQ2SEQ_RUNNER", AVGEN_DEFAULT_RUNNER));
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >>" + shell_quote(log.string()) + " 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc != 0) {
    throw ConfigError("seq2seq runner failed (status " + std::to_string(rc) + "); see " + log.string());
  }
}

inline void write_examples(const std::filesystem::path& path, std::span<const TaskExample> examples) {
  std::vector<Json> rows;
  rows.reserve(examples.size());
  for (const auto& e : examples) {
    rows.push_back(Json{{"source", e.source}, {"target", e.target}, {"task", task_name(e.task)}});
  }
  write_jsonl(path, rows);
}

}  // namespace detail

class ExternalModel final : public TrainedModel {
 public:
  static constexpr std::string_view kWeightsDir = "weights";

  /// Trains in `workdir` (defaults to a fingerprint-keyed temp directory).
  static std::shared_ptr<ExternalModel> train(std::span<const TaskExample> examples, const BackendConfig& config,
                                              std::span<const TaskExample> val_examples,
                                              std::filesystem::path workdir = {}) {
    namespace fs = std::filesystem;
    check_training_inputs(examples, config);
    auto fp = training_fingerprint(examples, config, val_examples);
    if (workdir.empty()) workdir = fs::temp_directory_path() / ("avgen-" + fp.substr(0, 16));
    fs::create_directories(workdir);
    write_json(workdir / "config.json", to_json(config));
    detail::write_examples(workdir / "train.jsonl", examples);
    detail::write_examples(workdir / "val.jsonl", val_examples);

    const auto start = std::chrono::steady_clock::now();
    detail::run_runner({"train", "--workdir", workdir.string()}, workdir / "runner.log");
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Json r = read_json(workdir / "report.json");
    TrainingReport report = training_report_from_json(r);
    report.examples = examples.size();
    report.val_examples = val_examples.size();
    report.train_seconds = seconds;
    return std::shared_ptr<ExternalModel>(new ExternalModel(config, std::move(fp), std::move(report),
                                                            workdir / "model",
                                                            r.value("parameter_count", std::uint64_t{0})));
  }

  static std::shared_ptr<ExternalModel> load(const std::filesystem::path& dir) {
    Json m = read_json(dir / kManifestFile);
    return std::shared_ptr<ExternalModel>(
        new ExternalModel(config_from_json(m.at("config")), m.at("fingerprint").get<std::string>(),
                          training_report_from_json(m.at("training_report")), dir / kWeightsDir,
                          m.value("parameter_count", std::uint64_t{0})));
  }

  std::vector<std::string> generate(std::span<const std::string> sources) const override {
    namespace fs = std::filesystem;
    if (sources.empty()) return {};
    std::lock_guard lock(mutex_);
    fs::path scratch = fs::temp_directory_path() / ("avgen-gen-" + fingerprint().substr(0, 16) + "-" +
                                                    std::to_string(++calls_));
    fs::create_directories(scratch);
    std::vector<Json> rows;
    rows.reserve(sources.size());
    for (const auto& s : sources) rows.push_back(Json{{"source", s}});
    write_jsonl(scratch / "sources.jsonl", rows);
    write_json(scratch / "config.json", to_json(config()));
    detail::run_runner({"generate", "--model", weights_.string(), "--config", (scratch / "config.json").string(),
                        "--in", (scratch / "sources.jsonl").string(), "--out",
                        (scratch / "outputs.jsonl").string()},
                       scratch / "runner.log");
    std::vector<std::string> out;
    for_each_line(scratch / "outputs.jsonl", [&](std::size_t, const std::string& line) {
      out.push_back(Json::parse(line).at("output").get<std::string>());
    });
    if (out.size() != sources.size()) {
      throw ConsistencyError("runner returned " + std::to_string(out.size()) + " outputs for " +
                             std::to_string(sources.size()) + " sources");
    }
    fs::remove_all(scratch);
    return out;
  }

  std::string_view backend() const override { return "external"; }
  std::uint64_t parameter_count() const override { return parameter_count_; }
  const std::filesystem::path& weights() const { return weights_; }

  void save(const std::filesystem::path& dir) const override {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    if (fs::weakly_canonical(weights_) != fs::weakly_canonical(dir / kWeightsDir)) {
      fs::remove_all(dir / kWeightsDir);
      fs::copy(weights_, dir / kWeightsDir, fs::copy_options::recursive);
    }
    write_json(dir / kManifestFile, manifest());
  }

 private:
  ExternalModel(BackendConfig config, std::string fp, TrainingReport report, std::filesystem::path weights,
                std::uint64_t parameter_count)
      : TrainedModel(std::move(config), std::move(fp), std::move(report)),
        weights_(std::move(weights)),
        parameter_count_(parameter_count) {}

  std::filesystem::path weights_;
  std::uint64_t parameter_count_;
  mutable std::mutex mutex_;
  mutable std::size_t calls_ = 0;
};

/// Trains with the backend named by config.model_id ("mock" or external).
inline ModelPtr train_model(std::span<const TaskExample> examples, const BackendConfig& config,
                            std::span<const TaskExample> val_examples) {
  if (config.model_id == kMockModelId) return MockModel::train(examples, config, val_examples);
  return ExternalModel::train(examples, config, val_examples);
}

inline ModelPtr load_model(const std::filesystem::path& dir) {
  Json m = read_json(dir / kManifestFile);
  auto backend = m.value("backend", std::string{});
  if (backend == "mock") return MockModel::load(dir);
  if (backend == "external") return ExternalModel::load(dir);
  throw InputError(dir.string() + ": unknown backend '" + backend + "'");
}

}  // namespace avgen

#endif  // AVGEN_EXTERNAL_BACKEND_HPP_
