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

// The three generation strategies (pipeline, multitask, end2end) and their
// union ensemble: corpus construction, training, and batched inference.

#ifndef AVGEN_STRATEGIES_HPP_
#define AVGEN_STRATEGIES_HPP_

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "avgen/backend.hpp"
#include "avgen/external_backend.hpp"
#include "avgen/normalize.hpp"
#include "avgen/records_io.hpp"
#include "avgen/serdes.hpp"
#include "avgen/types.hpp"

namespace avgen {

struct Diagnostics {
  std::size_t malformed_segments = 0;
  std::size_t values_not_found = 0;
  std::size_t duplicates_removed = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    malformed_segments += o.malformed_segments;
    values_not_found += o.values_not_found;
    duplicates_removed += o.duplicates_removed;
    return *this;
  }
  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct PredictionSet {
  std::string record_id;
  std::vector<AttrValuePair> pairs;
  Diagnostics diagnostics;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

inline Json to_json(const PredictionSet& p, StrategyKind strategy) {
  return Json{{"id", p.record_id},
              {"strategy", strategy_name(strategy)},
              {"pairs", to_json(p.pairs)},
              {"diagnostics",
               {{"malformed_segments", p.diagnostics.malformed_segments},
                {"values_not_found", p.diagnostics.values_not_found},
                {"duplicates_removed", p.diagnostics.duplicates_removed}}}};
}

inline PredictionSet prediction_from_json(const Json& j) {
  PredictionSet p;
  p.record_id = j.at("id").get<std::string>();
  p.pairs = pairs_from_json(j.at("pairs"));
  if (auto d = j.find("diagnostics"); d != j.end()) {
    p.diagnostics.malformed_segments = d->value("malformed_segments", std::size_t{0});
    p.diagnostics.values_not_found = d->value("values_not_found", std::size_t{0});
    p.diagnostics.duplicates_removed = d->value("duplicates_removed", std::size_t{0});
  }
  return p;
}

inline void write_predictions(const std::filesystem::path& path, const std::vector<PredictionSet>& preds,
                              StrategyKind strategy) {
  auto out = open_output(path);
  for (const auto& p : preds) out << to_json(p, strategy).dump() << '\n';
}

inline std::vector<PredictionSet> read_predictions(const std::filesystem::path& path) {
  std::vector<PredictionSet> preds;
  for_each_line(path, [&](std::size_t n, const std::string& line) {
    try {
      preds.push_back(prediction_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return preds;
}

/// Union under pair normalization; diagnostics are summed.
inline PredictionSet ensemble_combine(std::span<const PredictionSet> members) {
  PredictionSet out;
  if (members.empty()) return out;
  out.record_id = members.front().record_id;
  std::set<AttrValuePair> seen;
  for (const auto& m : members) {
    if (m.record_id != out.record_id) {
      throw UsageError("ensemble members disagree on record id: '" + out.record_id + "' vs '" + m.record_id + "'");
    }
    out.diagnostics += m.diagnostics;
    for (const auto& p : m.pairs) {
      if (seen.insert(normalize_pair(p)).second) out.pairs.push_back(p);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpora

struct RoleCorpus {
  ModelRole role;
  std::vector<TaskExample> train;
  std::vector<TaskExample> val;
};

struct StrategyCorpus {
  std::vector<RoleCorpus> corpora;  // two for pipeline, one otherwise
  BuildReport train_report;
  BuildReport val_report;
};

/// Training corpora for a strategy. Pipeline separates VE and AG instances
/// into two corpora; multitask keeps them mixed under task prefixes.
inline StrategyCorpus build_corpus(std::span<const ProductRecord> train, std::span<const ProductRecord> val,
                                   StrategyKind kind) {
  if (kind == StrategyKind::Ensemble) throw UsageError("an ensemble has no corpus of its own");
  if (train.empty()) throw ConfigError("cannot build a corpus from an empty record stream");
  StrategyCorpus out;
  auto build = [&](std::span<const ProductRecord> records, BuildReport& report) {
    std::vector<TaskExample> examples;
    for (const auto& r : records) {
      for (auto& e : make_training_examples(r, kind, &report)) examples.push_back(std::move(e));
    }
    return examples;
  };
  auto train_examples = build(train, out.train_report);
  auto val_examples = build(val, out.val_report);

  switch (kind) {
    case StrategyKind::Pipeline: {
      RoleCorpus ve{ModelRole::PipelineVE, {}, {}}, ag{ModelRole::PipelineAG, {}, {}};
      for (auto& e : train_examples) (e.task == Task::VE ? ve.train : ag.train).push_back(std::move(e));
      for (auto& e : val_examples) (e.task == Task::VE ? ve.val : ag.val).push_back(std::move(e));
      out.corpora.push_back(std::move(ve));
      out.corpora.push_back(std::move(ag));
      break;
    }
    case StrategyKind::Multitask:
      out.corpora.push_back({ModelRole::Multitask, std::move(train_examples), std::move(val_examples)});
      break;
    case StrategyKind::End2End:
      out.corpora.push_back({ModelRole::End2End, std::move(train_examples), std::move(val_examples)});
      break;
    case StrategyKind::Ensemble:
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference

namespace detail {

// Stage 1 over all records, then stage 2 over all highlighted candidates.
inline std::vector<PredictionSet> two_stage_predict(const TrainedModel& ve, const TrainedModel& ag, bool prefixed,
                                                    std::span<const ProductRecord> records) {
  auto with_prefix = [&](Task t, const std::string& s) { return prefixed ? add_task_prefix(t, s) : s; };

  std::vector<std::string> texts, stage1;
  texts.reserve(records.size());
  for (const auto& r : records) {
    texts.push_back(sanitize_text(r.text));
    stage1.push_back(with_prefix(Task::VE, texts.back()));
  }
  auto value_strings = ve.generate(stage1);

  std::vector<PredictionSet> out(records.size());
  struct Pending {
    std::size_t record;
    std::string value;
  };
  std::vector<Pending> pending;
  std::vector<std::string> stage2;
  for (std::size_t i = 0; i < records.size(); ++i) {
    out[i].record_id = records[i].id;
    auto parsed = parse_values(value_strings[i]);
    out[i].diagnostics.malformed_segments += parsed.malformed_segments;
    out[i].diagnostics.duplicates_removed += parsed.duplicates;
    for (auto& v : parsed.parsed) {
      auto highlighted = highlight_value(texts[i], v);
      if (!highlighted) {
        ++out[i].diagnostics.values_not_found;
        continue;
      }
      stage2.push_back(with_prefix(Task::AG, *highlighted));
      pending.push_back({i, std::move(v)});
    }
  }

  auto attributes = ag.generate(stage2);
  for (std::size_t k = 0; k < pending.size(); ++k) {
    auto attribute = text::trim(attributes[k]);
    auto& pred = out[pending[k].record];
    if (attribute.empty()) {
      ++pred.diagnostics.malformed_segments;
      continue;
    }
    pred.pairs.push_back({std::string(attribute), std::move(pending[k].value)});
  }
  for (auto& pred : out) pred.diagnostics.duplicates_removed += dedup_pairs(pred.pairs);
  return out;
}

}  // namespace detail

/// A trained strategy. Holds immutable model handles; prediction for
/// different records may run concurrently.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual StrategyKind kind() const = 0;
  virtual std::vector<PredictionSet> predict(std::span<const ProductRecord> records) const = 0;

  /// Trained models keyed by role; empty for ensembles.
  virtual std::vector<std::pair<ModelRole, ModelPtr>> models() const = 0;

  PredictionSet predict(const std::string& id, const std::string& text) const {
    ProductRecord r{id, {}, text, {}};
    return predict(std::span<const ProductRecord>(&r, 1)).front();
  }

  std::uint64_t parameter_count() const {
    std::uint64_t n = 0;
    for (const auto& [role, m] : models()) n += m->parameter_count();
    return n;
  }
};

using StrategyPtr = std::shared_ptr<const Strategy>;

class PipelineStrategy final : public Strategy {
 public:
  using Strategy::predict;
  PipelineStrategy(ModelPtr ve, ModelPtr ag) : ve_(std::move(ve)), ag_(std::move(ag)) {}
  StrategyKind kind() const override { return StrategyKind::Pipeline; }
  std::vector<PredictionSet> predict(std::span<const ProductRecord> records) const override {
    return detail::two_stage_predict(*ve_, *ag_, false, records);
  }
  std::vector<std::pair<ModelRole, ModelPtr>> models() const override {
    return {{ModelRole::PipelineVE, ve_}, {ModelRole::PipelineAG, ag_}};
  }

 private:
  ModelPtr ve_, ag_;
};

/// Same two-stage flow as the pipeline, one shared model, task prefixes.
class MultitaskStrategy final : public Strategy {
 public:
  using Strategy::predict;
  explicit MultitaskStrategy(ModelPtr model) : model_(std::move(model)) {}
  StrategyKind kind() const override { return StrategyKind::Multitask; }
  std::vector<PredictionSet> predict(std::span<const ProductRecord> records) const override {
    return detail::two_stage_predict(*model_, *model_, true, records);
  }
  std::vector<std::pair<ModelRole, ModelPtr>> models() const override { return {{ModelRole::Multitask, model_}}; }

 private:
  ModelPtr model_;
};

class End2EndStrategy final : public Strategy {
 public:
  using Strategy::predict;
  explicit End2EndStrategy(ModelPtr model) : model_(std::move(model)) {}
  StrategyKind kind() const override { return StrategyKind::End2End; }
  std::vector<PredictionSet> predict(std::span<const ProductRecord> records) const override {
    std::vector<std::string> sources;
    sources.reserve(records.size());
    for (const auto& r : records) sources.push_back(sanitize_text(r.text));
    auto generated = model_->generate(sources);
    std::vector<PredictionSet> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto parsed = parse_pairs(generated[i]);
      out[i].record_id = records[i].id;
      out[i].pairs = std::move(parsed.parsed);
      out[i].diagnostics.malformed_segments = parsed.malformed_segments;
      out[i].diagnostics.duplicates_removed = parsed.duplicates;
    }
    return out;
  }
  std::vector<std::pair<ModelRole, ModelPtr>> models() const override { return {{ModelRole::End2End, model_}}; }

 private:
  ModelPtr model_;
};

class EnsembleStrategy final : public Strategy {
 public:
  using Strategy::predict;
  explicit EnsembleStrategy(std::vector<StrategyPtr> members) : members_(std::move(members)) {
    if (members_.empty()) throw UsageError("an ensemble needs at least one member");
    for (const auto& m : members_) {
      if (m->kind() == StrategyKind::Ensemble) throw UsageError("ensembles cannot be nested");
    }
  }
  StrategyKind kind() const override { return StrategyKind::Ensemble; }
  std::vector<PredictionSet> predict(std::span<const ProductRecord> records) const override {
    std::vector<std::vector<PredictionSet>> per_member;
    for (const auto& m : members_) per_member.push_back(m->predict(records));
    std::vector<PredictionSet> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::vector<PredictionSet> sets;
      for (auto& preds : per_member) sets.push_back(std::move(preds[i]));
      out.push_back(ensemble_combine(sets));
    }
    return out;
  }
  std::vector<std::pair<ModelRole, ModelPtr>> models() const override {
    std::vector<std::pair<ModelRole, ModelPtr>> all;
    for (const auto& m : members_) {
      for (auto& entry : m->models()) all.push_back(std::move(entry));
    }
    return all;
  }
  const std::vector<StrategyPtr>& members() const { return members_; }

 private:
  std::vector<StrategyPtr> members_;
};

// ---------------------------------------------------------------------------
// Training and persistence

using ConfigResolver = std::function<BackendConfig(ModelRole)>;

inline StrategyPtr assemble_strategy(StrategyKind kind, const std::map<ModelRole, ModelPtr>& models) {
  auto get = [&](ModelRole r) {
    auto it = models.find(r);
    if (it == models.end()) throw InputError("missing model for role " + std::string(role_name(r)));
    return it->second;
  };
  switch (kind) {
    case StrategyKind::Pipeline:
      return std::make_shared<PipelineStrategy>(get(ModelRole::PipelineVE), get(ModelRole::PipelineAG));
    case StrategyKind::Multitask: return std::make_shared<MultitaskStrategy>(get(ModelRole::Multitask));
    case StrategyKind::End2End: return std::make_shared<End2EndStrategy>(get(ModelRole::End2End));
    case StrategyKind::Ensemble: break;
  }
  throw UsageError("ensembles are assembled from trained members");
}

inline StrategyPtr train_strategy(const StrategyCorpus& corpus, StrategyKind kind, const ConfigResolver& config_for) {
  std::map<ModelRole, ModelPtr> models;
  for (const auto& c : corpus.corpora) models[c.role] = train_model(c.train, config_for(c.role), c.val);
  return assemble_strategy(kind, models);
}

inline StrategyPtr train_strategy(std::span<const ProductRecord> train, std::span<const ProductRecord> val,
                                  StrategyKind kind, const ConfigResolver& config_for) {
  return train_strategy(build_corpus(train, val, kind), kind, config_for);
}

inline constexpr std::string_view kStrategyFile = "strategy.json";

/// Layout: <dir>/strategy.json names each role's fingerprint; every model
/// lives in <dir>/<fingerprint>/ with its manifest.
inline void save_strategy(const Strategy& s, const std::filesystem::path& dir) {
  Json models = Json::object();
  for (const auto& [role, m] : s.models()) {
    m->save(dir / m->fingerprint());
    models[std::string(role_name(role))] = m->fingerprint();
  }
  write_json(dir / kStrategyFile, Json{{"strategy", strategy_name(s.kind())}, {"models", models}});
}

inline StrategyPtr load_strategy(const std::filesystem::path& dir) {
  Json j = read_json(dir / kStrategyFile);
  StrategyKind kind = parse_strategy(j.at("strategy").get<std::string>());
  std::map<ModelRole, ModelPtr> models;
  for (auto role : {ModelRole::PipelineVE, ModelRole::PipelineAG, ModelRole::Multitask, ModelRole::End2End}) {
    auto it = j.at("models").find(std::string(role_name(role)));
    if (it != j.at("models").end()) models[role] = load_model(dir / it->get<std::string>());
  }
  return assemble_strategy(kind, models);
}

// ---------------------------------------------------------------------------
// Cost measurement

struct StrategyCost {
  double train_seconds = 0;
  double infer_seconds_per_1k = 0;    // per 1k products
  std::uint64_t memory = 0;           // total parameter count of all models held
  double generated_pairs_per_product = 0;
};

/// Trains the strategy and times prediction over `test`, repeated
/// `infer_rounds` times to smooth timer noise.
inline std::pair<StrategyPtr, StrategyCost> measure_strategy(std::span<const ProductRecord> train,
                                                             std::span<const ProductRecord> val,
                                                             std::span<const ProductRecord> test, StrategyKind kind,
                                                             const ConfigResolver& config_for,
                                                             std::size_t infer_rounds = 1) {
  using Clock = std::chrono::steady_clock;
  StrategyCost cost;
  auto t0 = Clock::now();
  auto strategy = train_strategy(train, val, kind, config_for);
  cost.train_seconds = std::max(std::chrono::duration<double>(Clock::now() - t0).count(), 1e-9);

  std::vector<PredictionSet> preds;
  auto t1 = Clock::now();
  for (std::size_t round = 0; round < std::max<std::size_t>(infer_rounds, 1); ++round) preds = strategy->predict(test);
  double infer = std::chrono::duration<double>(Clock::now() - t1).count() / static_cast<double>(std::max<std::size_t>(infer_rounds, 1));
  cost.infer_seconds_per_1k = test.empty() ? 1e-9 : std::max(infer, 1e-9) * 1000.0 / static_cast<double>(test.size());
  cost.memory = strategy->parameter_count();

  std::size_t pairs = 0;
  for (const auto& p : preds) pairs += p.pairs.size();
  cost.generated_pairs_per_product = test.empty() ? 0 : static_cast<double>(pairs) / static_cast<double>(test.size());
  return {strategy, cost};
}

}  // namespace avgen

#endif  // AVGEN_STRATEGIES_HPP_
