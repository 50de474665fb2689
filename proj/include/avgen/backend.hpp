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

// Seq2seq backend contract: configuration (with the published
// hyper-parameter defaults), the trained-model interface, early stopping,
// batch scheduling, fingerprints, and the memorizing mock backend.

#ifndef AVGEN_BACKEND_HPP_
#define AVGEN_BACKEND_HPP_

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "avgen/digest.hpp"
#include "avgen/random.hpp"
#include "avgen/records_io.hpp"
#include "avgen/serdes.hpp"
#include "avgen/text.hpp"
#include "avgen/types.hpp"

namespace avgen {

inline constexpr std::string_view kMockModelId = "mock";

/// Which trained model inside a strategy a configuration is for.
enum class ModelRole { PipelineVE, PipelineAG, Multitask, End2End };

inline std::string_view role_name(ModelRole r) {
  switch (r) {
    case ModelRole::PipelineVE: return "pipeline_ve";
    case ModelRole::PipelineAG: return "pipeline_ag";
    case ModelRole::Multitask: return "multitask";
    case ModelRole::End2End: return "end2end";
  }
  return "?";
}

struct BackendConfig {
  std::string model_id{kMockModelId};
  std::size_t max_input_tokens = 512;
  std::size_t max_output_tokens = 64;
  std::size_t epochs = 1;
  double learning_rate = 1e-4;
  std::size_t batch_size = 1;
  std::size_t early_stop_patience = 3;
  std::size_t beam_width = 1;  // 1 = greedy
  std::uint64_t seed = 0;
  std::vector<std::string> special_tokens{std::string(kHighlight)};

  friend bool operator==(const BackendConfig&, const BackendConfig&) = default;
};

inline std::string decode_mode_name(const BackendConfig& c) {
  return c.beam_width <= 1 ? "greedy" : "beam:" + std::to_string(c.beam_width);
}

/// "greedy" or "beam:K".
inline std::size_t parse_decode_mode(std::string_view mode) {
  if (mode == "greedy") return 1;
  if (mode.starts_with("beam:")) {
    try {
      long k = std::stol(std::string(mode.substr(5)));
      if (k >= 1) return static_cast<std::size_t>(k);
    } catch (const std::exception&) {
    }
  }
  throw UsageError("decode mode must be 'greedy' or 'beam:K' with K >= 1");
}

inline void validate(const BackendConfig& c) {
  if (c.model_id.empty()) throw ConfigError("model_id is empty");
  if (c.max_input_tokens == 0 || c.max_output_tokens == 0 || c.epochs == 0 || c.batch_size == 0 ||
      c.early_stop_patience == 0) {
    throw ConfigError("backend counts must be positive");
  }
  if (!(c.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (c.beam_width < 1) throw ConfigError("beam width must be >= 1");
}

// Adam is the only optimizer; these are the library defaults it runs with.
inline Json optimizer_json() {
  return Json{{"name", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}, {"schedule", "constant"}};
}

inline Json to_json(const BackendConfig& c) {
  return Json{{"model_id", c.model_id},
              {"max_input_tokens", c.max_input_tokens},
              {"max_output_tokens", c.max_output_tokens},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"early_stop_patience", c.early_stop_patience},
              {"decode", decode_mode_name(c)},
              {"seed", c.seed},
              {"special_tokens", c.special_tokens},
              {"optimizer", optimizer_json()}};
}

inline BackendConfig config_from_json(const Json& j) {
  BackendConfig c;
  c.model_id = j.at("model_id").get<std::string>();
  c.max_input_tokens = j.at("max_input_tokens").get<std::size_t>();
  c.max_output_tokens = j.at("max_output_tokens").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
  c.beam_width = parse_decode_mode(j.at("decode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.special_tokens = j.at("special_tokens").get<std::vector<std::string>>();
  return c;
}

// ---------------------------------------------------------------------------
// Published hyper-parameters

struct HyperParams {
  std::size_t epochs;
  double learning_rate;
  std::size_t batch_size;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct HyperParamRow {
  std::string_view model_id;
  ModelRole role;
  HyperParams params;
};

inline constexpr std::array<HyperParamRow, 20> kPublishedHyperParams{{
    {"t5-small", ModelRole::PipelineVE, {9, 5e-5, 128}},
    {"t5-small", ModelRole::PipelineAG, {11, 5e-5, 128}},
    {"t5-small", ModelRole::Multitask, {16, 5e-4, 256}},
    {"t5-small", ModelRole::End2End, {18, 5e-4, 256}},
    {"t5-base", ModelRole::PipelineVE, {8, 5e-4, 64}},
    {"t5-base", ModelRole::PipelineAG, {7, 5e-4, 64}},
    {"t5-base", ModelRole::Multitask, {8, 5e-4, 128}},
    {"t5-base", ModelRole::End2End, {11, 5e-4, 64}},
    {"t5-large", ModelRole::PipelineVE, {6, 5e-5, 128}},
    {"t5-large", ModelRole::PipelineAG, {5, 5e-4, 64}},
    {"t5-large", ModelRole::Multitask, {5, 1e-4, 64}},
    {"t5-large", ModelRole::End2End, {8, 1e-4, 64}},
    {"facebook/bart-base", ModelRole::PipelineVE, {5, 5e-5, 64}},
    {"facebook/bart-base", ModelRole::PipelineAG, {4, 1e-4, 128}},
    {"facebook/bart-base", ModelRole::Multitask, {4, 1e-4, 64}},
    {"facebook/bart-base", ModelRole::End2End, {6, 5e-4, 128}},
    {"facebook/bart-large", ModelRole::PipelineVE, {6, 5e-5, 64}},
    {"facebook/bart-large", ModelRole::PipelineAG, {4, 5e-5, 128}},
    {"facebook/bart-large", ModelRole::Multitask, {3, 1e-5, 64}},
    {"facebook/bart-large", ModelRole::End2End, {7, 1e-5, 64}},
}};

// Accepts hub-style ids and bare names ("bart-base" == "facebook/bart-base").
inline std::string canonical_model_id(std::string_view id) {
  std::string lower = text::to_lower(id);
  if (lower == "bart-base" || lower == "bart-large") return "facebook/" + lower;
  return lower;
}

inline std::optional<HyperParams> published_hyperparams(std::string_view model_id, ModelRole role) {
  const std::string id = canonical_model_id(model_id);
  for (const auto& row : kPublishedHyperParams) {
    if (row.model_id == id && row.role == role) return row.params;
  }
  return std::nullopt;
}

/// Defaults for (model, role): the published row when one exists, the
/// t5-small row otherwise (which covers the mock and local checkpoints).
inline BackendConfig default_config(std::string_view model_id, ModelRole role) {
  BackendConfig c;
  c.model_id = std::string(model_id);
  HyperParams hp = published_hyperparams(model_id, role)
                       .value_or(*published_hyperparams("t5-small", role));
  c.epochs = hp.epochs;
  c.learning_rate = hp.learning_rate;
  c.batch_size = hp.batch_size;
  c.max_input_tokens = 512;
  c.max_output_tokens = role == ModelRole::End2End ? 256 : 64;
  c.early_stop_patience = 3;
  return c;
}

/// Explicit settings that override the defaults.
struct ConfigOverrides {
  std::optional<std::size_t> epochs, batch_size, max_input_tokens, max_output_tokens, early_stop_patience,
      beam_width;
  std::optional<double> learning_rate;
  std::optional<std::uint64_t> seed;

  void apply_to(BackendConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (max_input_tokens) c.max_input_tokens = *max_input_tokens;
    if (max_output_tokens) c.max_output_tokens = *max_output_tokens;
    if (early_stop_patience) c.early_stop_patience = *early_stop_patience;
    if (beam_width) c.beam_width = *beam_width;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (seed) c.seed = *seed;
  }
};

inline BackendConfig resolve_config(std::string_view model_id, ModelRole role, const ConfigOverrides& o) {
  BackendConfig c = default_config(model_id, role);
  o.apply_to(c);
  validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Training machinery shared by backends

/// Stops once validation loss fails to improve `patience` epochs in a row.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records one epoch's validation loss; returns true when training should stop.
  bool update(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      stale_ = 0;
    } else {
      ++stale_;
    }
    return stale_ >= patience_;
  }

  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

/// One epoch of batches drawn without replacement from the shuffled pool.
/// For multitask corpora the pool mixes VE and AG instances.
inline std::vector<std::vector<std::size_t>> batch_schedule(std::size_t pool_size, std::size_t batch_size,
                                                            std::mt19937_64& rng) {
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  seeded_shuffle(order, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < pool_size; i += batch_size) {
    batches.emplace_back(order.begin() + i, order.begin() + std::min(pool_size, i + batch_size));
  }
  return batches;
}

/// Keeps at most `max_tokens` whitespace tokens; shorter strings are untouched.
inline std::string truncate_tokens(std::string_view s, std::size_t max_tokens, bool* truncated = nullptr) {
  auto tokens = text::whitespace_tokens(s);
  if (truncated) *truncated = tokens.size() > max_tokens;
  if (tokens.size() <= max_tokens) return std::string(s);
  std::vector<std::string> kept(tokens.begin(), tokens.begin() + max_tokens);
  return text::join(kept, " ");
}

/// Digest of the backend configuration and both corpora.
inline std::string training_fingerprint(std::span<const TaskExample> examples, const BackendConfig& config,
                                        std::span<const TaskExample> val_examples) {
  Sha256 h;
  h.field("avgen-model-v1").field(to_json(config).dump());
  for (auto corpus : {examples, val_examples}) {
    h.field(std::to_string(corpus.size()));
    for (const auto& e : corpus) h.field(task_name(e.task)).field(e.source).field(e.target);
  }
  return h.hex();
}

struct TrainingReport {
  std::size_t examples = 0;
  std::size_t val_examples = 0;
  std::size_t epochs_completed = 0;
  bool stopped_early = false;
  std::size_t truncated_sources = 0;
  std::size_t conflicting_targets = 0;
  std::vector<double> val_losses;
  double train_seconds = 0;
};

inline Json to_json(const TrainingReport& r) {
  return Json{{"examples", r.examples},
              {"val_examples", r.val_examples},
              {"epochs_completed", r.epochs_completed},
              {"stopped_early", r.stopped_early},
              {"truncated_sources", r.truncated_sources},
              {"conflicting_targets", r.conflicting_targets},
              {"val_losses", r.val_losses}};
}

inline TrainingReport training_report_from_json(const Json& j) {
  TrainingReport r;
  r.examples = j.value("examples", std::size_t{0});
  r.val_examples = j.value("val_examples", std::size_t{0});
  r.epochs_completed = j.value("epochs_completed", std::size_t{0});
  r.stopped_early = j.value("stopped_early", false);
  r.truncated_sources = j.value("truncated_sources", std::size_t{0});
  r.conflicting_targets = j.value("conflicting_targets", std::size_t{0});
  r.val_losses = j.value("val_losses", std::vector<double>{});
  return r;
}

inline void check_training_inputs(std::span<const TaskExample> examples, const BackendConfig& config) {
  validate(config);
  if (examples.empty()) throw ConfigError("cannot train on an empty corpus");
  bool has_highlight = std::any_of(examples.begin(), examples.end(), [](const TaskExample& e) {
    return e.source.find(kHighlight) != std::string::npos;
  });
  if (has_highlight && std::find(config.special_tokens.begin(), config.special_tokens.end(), kHighlight) ==
                           config.special_tokens.end()) {
    throw ConfigError("corpus uses <hl> but it is not registered as a special token");
  }
}

// ---------------------------------------------------------------------------
// Trained model interface

/// A trained seq2seq model. Generation is read-only and safe to call
/// concurrently; implementations that cannot be serialize internally.
class TrainedModel {
 public:
  virtual ~TrainedModel() = default;

  /// One output per source, in input order.
  virtual std::vector<std::string> generate(std::span<const std::string> sources) const = 0;

  virtual std::string_view backend() const = 0;
  virtual std::uint64_t parameter_count() const = 0;

  /// Writes the artifact directory (manifest plus backend payload).
  virtual void save(const std::filesystem::path& dir) const = 0;

  const BackendConfig& config() const { return config_; }
  const std::string& fingerprint() const { return fingerprint_; }
  const TrainingReport& report() const { return report_; }

 protected:
  TrainedModel(BackendConfig config, std::string fingerprint, TrainingReport report)
      : config_(std::move(config)), fingerprint_(std::move(fingerprint)), report_(std::move(report)) {}

  Json manifest() const {
    return Json{{"backend", backend()},
                {"fingerprint", fingerprint_},
                {"parameter_count", parameter_count()},
                {"config", to_json(config_)},
                {"training_report", to_json(report_)}};
  }

 private:
  BackendConfig config_;
  std::string fingerprint_;
  TrainingReport report_;
};

using ModelPtr = std::shared_ptr<const TrainedModel>;

inline constexpr std::string_view kManifestFile = "manifest.json";

// ---------------------------------------------------------------------------
// Mock backend

/// Memorizes source -> target exactly; unseen sources generate "".
class MockModel final : public TrainedModel {
 public:
  static constexpr std::uint64_t kParameterCount = 1;
  static constexpr std::string_view kMemoryFile = "memory.jsonl";

  static std::shared_ptr<MockModel> train(std::span<const TaskExample> examples, const BackendConfig& config,
                                          std::span<const TaskExample> val_examples) {
    check_training_inputs(examples, config);
    const auto start = std::chrono::steady_clock::now();
    TrainingReport report;
    report.examples = examples.size();
    report.val_examples = val_examples.size();

    std::vector<std::string> sources;
    sources.reserve(examples.size());
    for (const auto& e : examples) {
      bool truncated = false;
      sources.push_back(truncate_tokens(e.source, config.max_input_tokens, &truncated));
      report.truncated_sources += truncated;
    }

    std::unordered_map<std::string, std::string> memory;
    std::mt19937_64 rng(config.seed);
    EarlyStopping stopper(config.early_stop_patience);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (const auto& batch : batch_schedule(examples.size(), config.batch_size, rng)) {
        for (std::size_t i : batch) {
          auto [it, inserted] = memory.try_emplace(sources[i], examples[i].target);
          if (!inserted && epoch == 0 && it->second != examples[i].target) ++report.conflicting_targets;
        }
      }
      ++report.epochs_completed;
      if (val_examples.empty()) continue;
      double loss = zero_one_loss(memory, val_examples, config);
      report.val_losses.push_back(loss);
      if (stopper.update(loss)) {
        report.stopped_early = report.epochs_completed < config.epochs;
        break;
      }
    }
    report.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto fp = training_fingerprint(examples, config, val_examples);
    return std::shared_ptr<MockModel>(new MockModel(config, std::move(fp), std::move(report), std::move(memory)));
  }

  static std::shared_ptr<MockModel> load(const std::filesystem::path& dir) {
    Json m = read_json(dir / kManifestFile);
    std::unordered_map<std::string, std::string> memory;
    for_each_line(dir / kMemoryFile, [&](std::size_t, const std::string& line) {
      Json row = Json::parse(line);
      memory.emplace(row.at("source").get<std::string>(), row.at("target").get<std::string>());
    });
    return std::shared_ptr<MockModel>(new MockModel(config_from_json(m.at("config")),
                                                    m.at("fingerprint").get<std::string>(),
                                                    training_report_from_json(m.at("training_report")),
                                                    std::move(memory)));
  }

  std::vector<std::string> generate(std::span<const std::string> sources) const override {
    std::vector<std::string> out;
    out.reserve(sources.size());
    for (const auto& s : sources) out.push_back(lookup(memory_, s, config()));
    return out;
  }

  std::string_view backend() const override { return "mock"; }
  std::uint64_t parameter_count() const override { return kParameterCount; }
  std::size_t memorized() const { return memory_.size(); }

  void save(const std::filesystem::path& dir) const override {
    std::vector<std::pair<std::string, std::string>> rows(memory_.begin(), memory_.end());
    std::sort(rows.begin(), rows.end());
    std::vector<Json> lines;
    lines.reserve(rows.size());
    for (auto& [s, t] : rows) lines.push_back(Json{{"source", s}, {"target", t}});
    write_jsonl(dir / kMemoryFile, lines);
    write_json(dir / kManifestFile, manifest());
  }

 private:
  MockModel(BackendConfig config, std::string fp, TrainingReport report,
            std::unordered_map<std::string, std::string> memory)
      : TrainedModel(std::move(config), std::move(fp), std::move(report)), memory_(std::move(memory)) {}

  static std::string lookup(const std::unordered_map<std::string, std::string>& memory, std::string_view source,
                            const BackendConfig& config) {
    auto it = memory.find(truncate_tokens(source, config.max_input_tokens));
    if (it == memory.end()) return {};
    return truncate_tokens(it->second, config.max_output_tokens);
  }

  static double zero_one_loss(const std::unordered_map<std::string, std::string>& memory,
                              std::span<const TaskExample> val, const BackendConfig& config) {
    std::size_t wrong = 0;
    for (const auto& e : val) wrong += lookup(memory, e.source, config) != e.target;
    return static_cast<double>(wrong) / static_cast<double>(val.size());
  }

  std::unordered_map<std::string, std::string> memory_;
};

// ---------------------------------------------------------------------------
// Cost probing

struct ModelCost {
  double train_seconds = 0;
  double infer_seconds_per_1k = 0;
  std::uint64_t parameter_count = 0;
  std::size_t generations = 0;
};

/// Times generation over the examples' sources. Timings are clamped to a
/// nanosecond so that they stay strictly positive.
inline ModelCost cost_probe(const TrainedModel& model, std::span<const TaskExample> examples) {
  std::vector<std::string> sources;
  sources.reserve(examples.size());
  for (const auto& e : examples) sources.push_back(e.source);
  const auto start = std::chrono::steady_clock::now();
  auto outputs = model.generate(sources);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ModelCost cost;
  cost.train_seconds = std::max(model.report().train_seconds, 1e-9);
  cost.generations = outputs.size();
  cost.infer_seconds_per_1k =
      sources.empty() ? 1e-9 : std::max(seconds, 1e-9) * 1000.0 / static_cast<double>(sources.size());
  cost.parameter_count = model.parameter_count();
  return cost;
}

}  // namespace avgen

#endif  // AVGEN_BACKEND_HPP_
