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

// avgen: prepare | train | predict | evaluate | crosseval | costs
//
// Every command reads and writes file artifacts under --out. Settings come
// from flags, then from the flat key=value file given by --config, then
// from built-in defaults.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avgen/avgen.hpp"

namespace fs = std::filesystem;
using namespace avgen;

namespace {

constexpr int kExitFatal = 1;
constexpr int kExitUsage = 2;

/// Flat key=value file; '#' starts a comment line.
std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(path.string() + ":" + std::to_string(n) + ": expected key=value");
    }
    std::string key(text::trim(t.substr(0, eq)));
    std::replace(key.begin(), key.end(), '_', '-');
    kv[key] = std::string(text::trim(t.substr(eq + 1)));
  }
  return kv;
}

/// Fills options not given on the command line from the config file.
void apply_config(CLI::App& cmd, const std::map<std::string, std::string>& kv) {
  for (CLI::Option* opt : cmd.get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    auto it = kv.find(opt->get_lnames().front());
    if (it == kv.end()) continue;
    if (opt->get_type_size() == 0) {
      if (it->second == "true" || it->second == "1") opt->add_result("true");
    } else {
      opt->add_result(it->second);
    }
    opt->run_callback();
  }
}

class RunLog {
 public:
  explicit RunLog(const fs::path& out_dir) : out_(open_output(out_dir / "avgen.log.jsonl")) {}
  void event(const std::string& name, Json fields = Json::object()) {
    Json row{{"event", name}};
    for (auto& [k, v] : fields.items()) row[k] = v;
    out_ << row.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

struct BackendFlags {
  std::string model = std::string(kMockModelId);
  std::optional<std::size_t> epochs, batch_size, max_input, max_output, patience;
  std::optional<double> lr;
  std::string decode;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--model", model, "Backend model id ('mock' or a seq2seq checkpoint id)");
    cmd.add_option("--epochs", epochs);
    cmd.add_option("--learning-rate,--lr", lr);
    cmd.add_option("--batch-size", batch_size);
    cmd.add_option("--max-input-tokens", max_input);
    cmd.add_option("--max-output-tokens", max_output);
    cmd.add_option("--patience", patience, "Early-stopping patience in epochs");
    cmd.add_option("--decode", decode, "greedy | beam:K");
  }

  ConfigResolver resolver(std::uint64_t seed) const {
    ConfigOverrides o;
    o.epochs = epochs;
    o.learning_rate = lr;
    o.batch_size = batch_size;
    o.max_input_tokens = max_input;
    o.max_output_tokens = max_output;
    o.early_stop_patience = patience;
    if (!decode.empty()) o.beam_width = parse_decode_mode(decode);
    o.seed = seed;
    std::string id = model;
    return [id, o](ModelRole role) { return resolve_config(id, role, o); };
  }
};

void require(bool present, const std::string& flag) {
  if (!present) throw UsageError(flag + " is required");
}

void write_run_record(const fs::path& out, const std::string& command, const Globals& g, Json extra) {
  Json run{{"command", command}, {"seed", g.seed}};
  for (auto& [k, v] : extra.items()) run[k] = v;
  write_json(out / "run.json", run);
}

std::vector<ProductRecord> load_records(const fs::path& path, RunLog& log) {
  LoadReport report;
  auto records = load_canonical(path, report);
  if (report.malformed_lines || report.duplicate_ids || report.empty_records) {
    log.event("load_issues", Json{{"path", path.string()}, {"report", to_json(report)}});
  }
  return records;
}

// ---------------------------------------------------------------------------

int cmd_prepare(const Globals& g, const std::string& format_name, const std::string& in,
                const std::string& ratio_spec) {
  require(!format_name.empty(), "--format");
  require(!in.empty(), "--in");
  CorpusFormat format = parse_format(format_name);
  SplitRatios ratios = parse_ratios(ratio_spec);
  validate_ratios(ratios);
  fs::path out(g.out);
  fs::create_directories(out);
  RunLog log(out);

  LoadReport load;
  auto records = load_corpus(format, in, load);
  DatasetStats stats = compute_stats(records);
  log.event("loaded", Json{{"path", in}, {"report", to_json(load)}, {"stats", to_json(stats)}});
  if (auto ref = reference_stats(format); ref && !(*ref == stats)) {
    log.event("stats_differ_from_reference", Json{{"reference", to_json(*ref)}, {"actual", to_json(stats)}});
  }

  DatasetSplit split = stratified_split(std::move(records), ratios, g.seed);
  write_records(out / "train.jsonl", split.train);
  write_records(out / "val.jsonl", split.val);
  write_records(out / "test.jsonl", split.test);
  Json report = split_report_json(split);
  report["stats"] = to_json(stats);
  report["load"] = to_json(load);
  write_json(out / "split_report.json", report);
  for (const auto& [category, c] : split.categories) {
    if (c.too_small) log.event("category_too_small", Json{{"category", category}, {"records", c.total}});
  }
  write_run_record(out, "prepare", g, Json{{"format", format_name}, {"input", in}, {"ratios", ratios}});

  std::printf("prepared %zu records (%zu categories): train=%zu val=%zu test=%zu -> %s\n", stats.n_products,
              stats.n_categories, split.train.size(), split.val.size(), split.test.size(), out.c_str());
  if (load.malformed_lines) std::printf("skipped %zu malformed lines (see log)\n", load.malformed_lines);
  return 0;
}

struct SplitFiles {
  fs::path train, val;
};

SplitFiles split_files(const std::string& data, const std::string& train, const std::string& val) {
  SplitFiles f;
  if (!data.empty()) {
    f.train = fs::path(data) / "train.jsonl";
    f.val = fs::path(data) / "val.jsonl";
  }
  if (!train.empty()) f.train = train;
  if (!val.empty()) f.val = val;
  require(!f.train.empty(), "--data or --train");
  if (!fs::exists(f.train)) throw InputError("missing split file " + f.train.string());
  if (!f.val.empty() && !fs::exists(f.val)) throw InputError("missing split file " + f.val.string());
  return f;
}

int cmd_train(const Globals& g, const std::string& strategy_name_, const SplitFiles& files,
              const BackendFlags& backend) {
  require(!strategy_name_.empty(), "--strategy");
  StrategyKind kind = parse_strategy(strategy_name_);
  if (kind == StrategyKind::Ensemble) throw UsageError("train one member strategy at a time");
  fs::path out(g.out);
  fs::create_directories(out);
  RunLog log(out);
  auto train = load_records(files.train, log);
  std::vector<ProductRecord> val;
  if (!files.val.empty()) val = load_records(files.val, log);

  StrategyCorpus corpus = build_corpus(train, val, kind);
  log.event("corpus", Json{{"values_not_found", corpus.train_report.values_not_found},
                           {"records_without_pairs", corpus.train_report.records_without_pairs},
                           {"unusable_pairs", corpus.train_report.unusable_pairs},
                           {"duplicate_values", corpus.train_report.duplicate_values}});
  auto strategy = train_strategy(corpus, kind, backend.resolver(g.seed));
  save_strategy(*strategy, out);
  Json models = Json::array();
  for (const auto& [role, m] : strategy->models()) {
    log.event("trained", Json{{"role", role_name(role)},
                              {"fingerprint", m->fingerprint()},
                              {"report", to_json(m->report())},
                              {"config", to_json(m->config())}});
    models.push_back(Json{{"role", role_name(role)}, {"fingerprint", m->fingerprint()}});
    std::printf("trained %s model %s (%zu examples, %zu epochs)\n", std::string(role_name(role)).c_str(),
                m->fingerprint().substr(0, 12).c_str(), m->report().examples, m->report().epochs_completed);
  }
  write_run_record(out, "train", g,
                   Json{{"strategy", strategy_name(kind)}, {"model", backend.model}, {"models", models}});
  return 0;
}

int cmd_predict(const Globals& g, const std::string& models, const std::string& in) {
  require(!models.empty(), "--models");
  require(!in.empty(), "--in");
  fs::path out(g.out);
  fs::create_directories(out);
  RunLog log(out);
  auto strategy = load_strategy(models);
  auto records = load_records(in, log);
  auto preds = strategy->predict(records);
  write_predictions(out / "predictions.jsonl", preds, strategy->kind());
  Diagnostics total;
  std::size_t pairs = 0;
  for (const auto& p : preds) {
    total += p.diagnostics;
    pairs += p.pairs.size();
  }
  log.event("predicted", Json{{"records", preds.size()},
                              {"pairs", pairs},
                              {"malformed_segments", total.malformed_segments},
                              {"values_not_found", total.values_not_found},
                              {"duplicates_removed", total.duplicates_removed}});
  write_run_record(out, "predict", g, Json{{"models", models}, {"input", in}});
  std::printf("predicted %zu pairs for %zu records -> %s\n", pairs, preds.size(),
              (out / "predictions.jsonl").c_str());
  return 0;
}

EvalOptions eval_options(const std::string& average, const std::string& discard) {
  EvalOptions o;
  if (average == "macro") {
    o.averaging = Averaging::Macro;
  } else if (average != "micro") {
    throw UsageError("--average must be micro or macro");
  }
  if (discard == "dataset") {
    o.discard_scope = DiscardScope::Dataset;
  } else if (discard == "off") {
    o.discard = false;
  } else if (discard != "record") {
    throw UsageError("--discard must be record, dataset or off");
  }
  return o;
}

int cmd_evaluate(const Globals& g, const std::string& pred, const std::vector<std::string>& ensemble,
                 const std::string& gold, const EvalOptions& options) {
  require(!gold.empty(), "--gold");
  require(!pred.empty() || !ensemble.empty(), "--pred or --ensemble");
  fs::path out(g.out);
  fs::create_directories(out);
  RunLog log(out);
  auto golds = load_records(gold, log);

  std::vector<PredictionSet> preds;
  if (!ensemble.empty()) {
    std::map<std::string, std::vector<PredictionSet>> by_id;
    std::vector<std::string> order;
    for (const auto& file : ensemble) {
      for (auto& p : read_predictions(file)) {
        auto& slot = by_id[p.record_id];
        if (slot.empty()) order.push_back(p.record_id);
        slot.push_back(std::move(p));
      }
    }
    for (const auto& id : order) preds.push_back(ensemble_combine(by_id[id]));
  } else {
    preds = read_predictions(pred);
  }

  EvalReport report = score(preds, golds, options);
  Json doc = to_json(report);
  doc["seed"] = g.seed;
  write_json(out / "eval_report.json", doc);
  log.event("evaluated", Json{{"counts", to_json(report.counts)}});
  write_run_record(out, "evaluate", g,
                   Json{{"gold", gold}, {"predictions", ensemble.empty() ? std::vector<std::string>{pred} : ensemble}});
  std::printf("P=%.2f R=%.2f F1=%.2f (tp=%zu fp=%zu fn=%zu discarded=%zu)\n", to_percent(report.metrics.precision),
              to_percent(report.metrics.recall), to_percent(report.metrics.f1), report.counts.tp, report.counts.fp,
              report.counts.fn, report.counts.discarded);
  return 0;
}

int cmd_crosseval(const Globals& g, const std::vector<std::string>& triples, const EvalOptions& options) {
  if (triples.empty() || triples.size() % 3 != 0) {
    throw UsageError("--dataset takes NAME MODELS_DIR TEST_FILE, repeated per dataset");
  }
  fs::path out(g.out);
  fs::create_directories(out);
  RunLog log(out);
  std::vector<CrossEvalInput> inputs;
  for (std::size_t i = 0; i < triples.size(); i += 3) {
    if (!fs::exists(fs::path(triples[i + 1]) / kStrategyFile)) {
      throw ConfigError("no trained strategy in " + triples[i + 1]);
    }
    if (!fs::exists(triples[i + 2])) throw ConfigError("missing test split " + triples[i + 2]);
    inputs.push_back({triples[i], load_strategy(triples[i + 1]), load_records(triples[i + 2], log)});
  }
  CrossEvalMatrix matrix = cross_eval(inputs, options);
  Json doc = to_json(matrix);
  doc["seed"] = g.seed;
  write_json(out / "crosseval.json", doc);
  auto table = to_table(matrix);
  open_output(out / "crosseval.tsv") << table;
  write_run_record(out, "crosseval", g, Json{{"datasets", matrix.datasets}});
  std::cout << table;
  return 0;
}

int cmd_costs(const Globals& g, const std::string& data, const BackendFlags& backend, std::size_t rounds) {
  require(!data.empty(), "--data");
  fs::path dir(data);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) {
    if (!fs::exists(dir / f)) throw InputError("missing split file " + (dir / f).string());
  }
  fs::path out(g.out);
  fs::create_directories(out);
  RunLog log(out);
  auto train = load_records(dir / "train.jsonl", log);
  auto val = load_records(dir / "val.jsonl", log);
  auto test = load_records(dir / "test.jsonl", log);
  if (test.empty()) throw InputError("test split " + (dir / "test.jsonl").string() + " is empty");
  std::map<StrategyKind, StrategyCost> probes;
  for (auto kind : {StrategyKind::Pipeline, StrategyKind::Multitask, StrategyKind::End2End}) {
    probes[kind] = measure_strategy(train, val, test, kind, backend.resolver(g.seed), rounds).second;
    log.event("probe", Json{{"strategy", strategy_name(kind)},
                            {"train_seconds", probes[kind].train_seconds},
                            {"infer_seconds_per_1k", probes[kind].infer_seconds_per_1k},
                            {"memory", probes[kind].memory}});
  }
  CostReport report = build_cost_report(probes);
  Json doc = to_json(report);
  doc["seed"] = g.seed;
  doc["model"] = backend.model;
  write_json(out / "cost_report.json", doc);
  write_run_record(out, "costs", g, Json{{"data", data}, {"model", backend.model}});
  std::printf("%-10s %8s %8s %8s %10s\n", "strategy", "train", "infer", "memory", "generated");
  for (const auto& row : report.rows) {
    auto cell = [](const std::optional<double>& v) {
      char buf[32];
      if (v) {
        std::snprintf(buf, sizeof buf, "%.2fx", *v);
      } else {
        std::snprintf(buf, sizeof buf, "n/a");
      }
      return std::string(buf);
    };
    std::printf("%-10s %8s %8s %8s %10s\n", std::string(strategy_name(row.strategy)).c_str(),
                cell(row.train).c_str(), cell(row.infer).c_str(), cell(row.memory).c_str(),
                cell(row.generated_pairs).c_str());
  }
  for (const auto& flag : report.flags) std::printf("note: %s\n", flag.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute-value generation: data prep, training, prediction and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Flat key=value settings file");
  app.add_option("--seed", g.seed, "Seed for splitting, batching and decoding");
  app.add_option("--out", g.out, "Output directory");

  auto* prepare = app.add_subcommand("prepare", "Load a corpus and write stratified train/val/test splits");
  std::string format, in, ratios = "8:1:1";
  prepare->add_option("--format", format, "ae110k | oamine | mave | canonical");
  prepare->add_option("--in", in, "Corpus file");
  prepare->add_option("--ratios", ratios, "train:val:test");

  auto* train = app.add_subcommand("train", "Train one strategy's model(s)");
  std::string strategy, data, train_file, val_file;
  BackendFlags train_backend;
  train->add_option("--strategy", strategy, "pipeline | multitask | end2end");
  train->add_option("--data", data, "Directory holding train.jsonl and val.jsonl");
  train->add_option("--train", train_file);
  train->add_option("--val", val_file);
  train_backend.add_to(*train);

  auto* predict = app.add_subcommand("predict", "Generate attribute-value pairs for a record file");
  std::string models, predict_in;
  predict->add_option("--models", models, "Directory written by 'train'");
  predict->add_option("--in", predict_in, "Canonical record file");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold records");
  std::string pred, gold, average = "micro", discard = "record";
  std::vector<std::string> ensemble;
  evaluate->add_option("--pred", pred, "Prediction file");
  evaluate->add_option("--ensemble", ensemble, "Member prediction files, unioned per record");
  evaluate->add_option("--gold", gold, "Canonical gold record file");

  auto* crosseval = app.add_subcommand("crosseval", "F1 matrix of every trained run against every test split");
  std::vector<std::string> triples;
  crosseval->add_option("--dataset", triples, "NAME MODELS_DIR TEST_FILE")
      ->expected(3)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  for (auto* cmd : {evaluate, crosseval}) {
    cmd->add_option("--average", average, "micro | macro");
    cmd->add_option("--discard", discard, "record | dataset | off");
  }

  auto* costs = app.add_subcommand("costs", "Train all strategies and report costs relative to end2end");
  std::string cost_data;
  std::size_t rounds = 3;
  BackendFlags cost_backend;
  costs->add_option("--data", cost_data, "Directory holding train/val/test splits");
  costs->add_option("--rounds", rounds, "Inference repetitions per strategy");
  cost_backend.add_to(*costs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (!g.config.empty()) {
      auto kv = read_config_file(g.config);
      apply_config(app, kv);
      apply_config(*cmd, kv);
    }
    require(!g.out.empty(), "--out");
    if (cmd == prepare) return cmd_prepare(g, format, in, ratios);
    if (cmd == train) return cmd_train(g, strategy, split_files(data, train_file, val_file), train_backend);
    if (cmd == predict) return cmd_predict(g, models, predict_in);
    if (cmd == evaluate) return cmd_evaluate(g, pred, ensemble, gold, eval_options(average, discard));
    if (cmd == crosseval) return cmd_crosseval(g, triples, eval_options(average, discard));
    if (cmd == costs) return cmd_costs(g, cost_data, cost_backend, rounds);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitUsage;
}
