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

// Scoring: pair normalization, the discard rule, micro/macro P/R/F1,
// cross-dataset matrices and cost reports.

#ifndef AVGEN_EVAL_HPP_
#define AVGEN_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "avgen/digest.hpp"
#include "avgen/normalize.hpp"
#include "avgen/records_io.hpp"
#include "avgen/strategies.hpp"
#include "avgen/types.hpp"

namespace avgen {

struct MatchCounts {
  std::size_t tp = 0, fp = 0, fn = 0, discarded = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    discarded += o.discarded;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

struct Metrics {
  double precision = 1.0, recall = 1.0, f1 = 1.0;
};

inline double f1_score(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

/// P is 1 with no retained predictions, R is 1 with no gold pairs.
inline Metrics metrics_from(const MatchCounts& c) {
  Metrics m;
  m.precision = c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

inline double to_percent(double x) { return std::round(x * 10000.0) / 100.0; }

enum class Averaging { Micro, Macro };
enum class DiscardScope { Record, Dataset };

struct EvalOptions {
  Averaging averaging = Averaging::Micro;
  DiscardScope discard_scope = DiscardScope::Record;
  bool discard = true;
};

struct DiscardResult {
  PredictionSet kept;
  std::size_t discarded = 0;
};

/// Drops predicted pairs whose normalized attribute is absent from
/// `gold_attributes` (already normalized).
inline DiscardResult apply_discard_rule(const PredictionSet& pred, const std::set<std::string>& gold_attributes) {
  DiscardResult out;
  out.kept.record_id = pred.record_id;
  out.kept.diagnostics = pred.diagnostics;
  for (const auto& p : pred.pairs) {
    if (gold_attributes.contains(normalize_attribute(p.attribute))) {
      out.kept.pairs.push_back(p);
    } else {
      ++out.discarded;
    }
  }
  return out;
}

inline std::set<std::string> attribute_set(std::span<const AttrValuePair> pairs) {
  std::set<std::string> attrs;
  for (const auto& p : pairs) attrs.insert(normalize_attribute(p.attribute));
  return attrs;
}

inline DiscardResult apply_discard_rule(const PredictionSet& pred, std::span<const AttrValuePair> gold) {
  return apply_discard_rule(pred, attribute_set(gold));
}

/// Counts for one record after the optional discard step.
inline MatchCounts match_record(const PredictionSet& pred, std::span<const AttrValuePair> gold,
                                const std::set<std::string>* allowed_attributes) {
  std::set<AttrValuePair> gold_set;
  for (const auto& g : gold) gold_set.insert(normalize_pair(g));

  MatchCounts c;
  std::set<AttrValuePair> predicted;
  for (const auto& p : pred.pairs) {
    auto n = normalize_pair(p);
    if (allowed_attributes && !allowed_attributes->contains(n.attribute)) {
      ++c.discarded;
      continue;
    }
    predicted.insert(std::move(n));
  }
  for (const auto& p : predicted) {
    if (gold_set.contains(p)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = gold_set.size() - c.tp;
  return c;
}

struct EvalReport {
  Metrics metrics;
  MatchCounts counts;
  std::map<std::string, Metrics> per_category;
  std::map<std::string, MatchCounts> per_category_counts;
  std::string fingerprint;
  EvalOptions options;
};

/// Scores predictions against gold records. Gold records with no
/// prediction count as empty predictions; an unknown prediction id is a
/// consistency error.
inline EvalReport score(std::span<const PredictionSet> predictions, std::span<const ProductRecord> golds,
                        const EvalOptions& options = {}) {
  std::unordered_map<std::string, const PredictionSet*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.record_id, &p).second) {
      throw ConsistencyError("duplicate prediction for id '" + p.record_id + "'");
    }
  }
  std::set<std::string> gold_ids;
  for (const auto& g : golds) gold_ids.insert(g.id);
  for (const auto& p : predictions) {
    if (!gold_ids.contains(p.record_id)) throw ConsistencyError("prediction for unknown id '" + p.record_id + "'");
  }

  std::set<std::string> dataset_attributes;
  if (options.discard && options.discard_scope == DiscardScope::Dataset) {
    for (const auto& g : golds) dataset_attributes.merge(attribute_set(g.pairs));
  }

  EvalReport report;
  report.options = options;
  static const PredictionSet kEmpty;
  double macro_p = 0, macro_r = 0, macro_f = 0;
  Sha256 digest;
  digest.field("avgen-eval-v1")
      .field(options.averaging == Averaging::Micro ? "micro" : "macro")
      .field(!options.discard ? "no-discard" : options.discard_scope == DiscardScope::Record ? "record" : "dataset");

  std::vector<const ProductRecord*> ordered;
  for (const auto& g : golds) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

  for (const ProductRecord* gold : ordered) {
    auto it = by_id.find(gold->id);
    const PredictionSet& pred = it == by_id.end() ? kEmpty : *it->second;
    std::set<std::string> record_attributes;
    const std::set<std::string>* allowed = nullptr;
    if (options.discard) {
      if (options.discard_scope == DiscardScope::Record) {
        record_attributes = attribute_set(gold->pairs);
        allowed = &record_attributes;
      } else {
        allowed = &dataset_attributes;
      }
    }
    MatchCounts c = match_record(pred, gold->pairs, allowed);
    report.counts += c;
    report.per_category_counts[gold->category] += c;
    Metrics m = metrics_from(c);
    macro_p += m.precision;
    macro_r += m.recall;
    macro_f += m.f1;

    std::set<AttrValuePair> normalized;
    for (const auto& p : pred.pairs) normalized.insert(normalize_pair(p));
    digest.field(gold->id);
    for (const auto& p : normalized) digest.field(p.attribute).field(p.value);
  }

  if (options.averaging == Averaging::Micro || ordered.empty()) {
    report.metrics = metrics_from(report.counts);
  } else {
    double n = static_cast<double>(ordered.size());
    report.metrics = {macro_p / n, macro_r / n, macro_f / n};
  }
  for (const auto& [category, c] : report.per_category_counts) report.per_category[category] = metrics_from(c);
  report.fingerprint = digest.hex();
  return report;
}

inline Json metrics_json(const Metrics& m) {
  return Json{{"precision", to_percent(m.precision)}, {"recall", to_percent(m.recall)}, {"f1", to_percent(m.f1)}};
}

inline Json to_json(const MatchCounts& c) {
  return Json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"discarded", c.discarded}};
}

/// Percentages rounded to two decimals.
inline Json to_json(const EvalReport& r) {
  Json per_category = Json::object();
  for (const auto& [category, m] : r.per_category) per_category[category] = metrics_json(m);
  return Json{{"precision", to_percent(r.metrics.precision)},
              {"recall", to_percent(r.metrics.recall)},
              {"f1", to_percent(r.metrics.f1)},
              {"counts", to_json(r.counts)},
              {"per_category", std::move(per_category)},
              {"averaging", r.options.averaging == Averaging::Micro ? "micro" : "macro"},
              {"discard", !r.options.discard                                 ? "off"
                          : r.options.discard_scope == DiscardScope::Record ? "record"
                                                                            : "dataset"},
              {"fingerprint", r.fingerprint}};
}

// ---------------------------------------------------------------------------
// Cross-dataset evaluation

struct CrossEvalMatrix {
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> f1;  // percent; row = training set, column = test set
};

struct CrossEvalInput {
  std::string name;
  StrategyPtr strategy;
  std::vector<ProductRecord> test;
};

inline CrossEvalMatrix cross_eval(std::span<const CrossEvalInput> inputs, const EvalOptions& options = {}) {
  CrossEvalMatrix m;
  for (const auto& in : inputs) {
    if (!in.strategy) throw ConfigError("no trained model for dataset '" + in.name + "'");
    m.datasets.push_back(in.name);
  }
  for (const auto& row : inputs) {
    std::vector<double> cells;
    for (const auto& col : inputs) {
      auto preds = row.strategy->predict(col.test);
      cells.push_back(to_percent(score(preds, col.test, options).metrics.f1));
    }
    m.f1.push_back(std::move(cells));
  }
  return m;
}

inline Json to_json(const CrossEvalMatrix& m) {
  return Json{{"datasets", m.datasets}, {"f1", m.f1}};
}

/// Tab-separated table with dataset headers; rows are training sets.
inline std::string to_table(const CrossEvalMatrix& m) {
  std::ostringstream out;
  out << "train\\test";
  for (const auto& d : m.datasets) out << '\t' << d;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.datasets.size(); ++i) {
    out << m.datasets[i];
    for (double v : m.f1[i]) {
      std::snprintf(buf, sizeof buf, "%.2f", v);
      out << '\t' << buf;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Cost report

struct CostRow {
  StrategyKind strategy;
  StrategyCost raw;
  // Ratios to the End2End row; empty when that row's value is zero.
  std::optional<double> train, infer, memory, generated_pairs;
};

struct CostReport {
  std::vector<CostRow> rows;
  std::vector<std::string> flags;
};

inline CostReport build_cost_report(const std::map<StrategyKind, StrategyCost>& probes) {
  auto base_it = probes.find(StrategyKind::End2End);
  if (base_it == probes.end()) throw UsageError("cost report needs an end2end probe");
  const StrategyCost& base = base_it->second;
  CostReport report;
  auto ratio = [&](double value, double reference, const char* metric) -> std::optional<double> {
    if (reference == 0) {
      std::string flag = std::string(metric) + ": end2end value is zero, reporting raw values only";
      if (std::find(report.flags.begin(), report.flags.end(), flag) == report.flags.end()) report.flags.push_back(flag);
      return std::nullopt;
    }
    return value / reference;
  };
  for (const auto& [kind, cost] : probes) {
    CostRow row{kind, cost, {}, {}, {}, {}};
    row.train = ratio(cost.train_seconds, base.train_seconds, "train");
    row.infer = ratio(cost.infer_seconds_per_1k, base.infer_seconds_per_1k, "infer");
    row.memory = ratio(static_cast<double>(cost.memory), static_cast<double>(base.memory), "memory");
    row.generated_pairs = ratio(cost.generated_pairs_per_product, base.generated_pairs_per_product, "generated_pairs");
    report.rows.push_back(row);
  }
  return report;
}

inline Json to_json(const CostReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back(Json{{"strategy", strategy_name(row.strategy)},
                        {"raw",
                         {{"train_seconds", row.raw.train_seconds},
                          {"infer_seconds_per_1k", row.raw.infer_seconds_per_1k},
                          {"memory", row.raw.memory},
                          {"generated_pairs_per_product", row.raw.generated_pairs_per_product}}},
                        {"normalized",
                         {{"train", opt(row.train)},
                          {"infer", opt(row.infer)},
                          {"memory", opt(row.memory)},
                          {"generated_pairs", opt(row.generated_pairs)}}}});
  }
  return Json{{"rows", std::move(rows)}, {"flags", r.flags}};
}

}  // namespace avgen

#endif  // AVGEN_EVAL_HPP_
