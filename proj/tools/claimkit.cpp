// claimkit command-line driver. Every subcommand reads an optional JSON run
// config (--config), lets flags override it, writes its outputs under --out
// and records a run_manifest.json next to them.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimkit/claimkit.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace claimkit;

namespace {

// Invalid input records, reported one by one in the error JSON.
class RecordsError : public ValidationError {
 public:
  RecordsError(const std::string& what, std::vector<RecordError> records)
      : ValidationError(what), records_(std::move(records)) {}
  const std::vector<RecordError>& records() const { return records_; }

 private:
  std::vector<RecordError> records_;
};

std::string utc_now() { return ResponseCache::utc_now(); }

struct Run {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  fs::path config_dir = ".";
  std::string config_sha256;
  fs::path out = "out";
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool validate_only = false;
  std::string started_at;
  json inputs = json::array();
  std::vector<std::string> outputs;
  std::optional<std::string> feature_config_hash;

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : config_dir / path;
  }

  // Flag value, else config["paths"][key] (relative to the config file).
  std::optional<fs::path> optional_path(const std::string& flag, const std::string& key) const {
    if (!flag.empty()) return fs::path(flag);
    if (config.contains("paths") && config["paths"].contains(key)) return resolve(config["paths"][key].get<std::string>());
    return std::nullopt;
  }

  fs::path input_path(const std::string& flag, const std::string& key) {
    auto p = optional_path(flag, key);
    if (!p) throw ValidationError("missing required --" + key);
    if (!fs::is_regular_file(*p)) throw ValidationError("input '" + p->string() + "' does not exist");
    inputs.push_back({{"role", key}, {"path", p->string()}, {"sha256", sha256_hex(read_file(*p))}});
    return *p;
  }

  void write(const std::string& name, std::string_view content) {
    outputs.push_back(name);
    if (!validate_only) write_file(out / name, content);
  }

  void write_manifest() const {
    if (validate_only) return;
    json m{{"tool", "claimkit"},
           {"version", CLAIMKIT_VERSION},
           {"command", command},
           {"argv", argv},
           {"seed", seed},
           {"jobs", jobs},
           {"config_sha256", config_sha256},
           {"inputs", inputs},
           {"outputs", outputs},
           {"started_at", started_at},
           {"finished_at", utc_now()}};
    if (feature_config_hash) m["feature_config_hash"] = *feature_config_hash;
    write_file(out / "run_manifest.json", m.dump(2) + "\n");
  }
};

json parse_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

DatasetFormat format_for(const fs::path& path, const std::string& flag) {
  if (!flag.empty()) return parse_dataset_format(flag);
  if (path.extension() == ".jsonl") return DatasetFormat::FeverJsonl;
  if (path.extension() == ".csv") return DatasetFormat::PairsCsv;
  throw ValidationError("cannot infer the format of '" + path.string() + "'; pass --format");
}

template <typename T>
std::vector<T> unwrap(LoadResult<T> r, const fs::path& path) {
  if (!r.ok()) {
    auto message = path.string() + ": " + std::to_string(r.errors.size()) + " invalid record(s), first at line " +
                   std::to_string(r.errors.front().line) + ": " + r.errors.front().message;
    throw RecordsError(std::move(message), std::move(r.errors));
  }
  return std::move(r.records);
}

std::vector<LabeledPair> load_pair_file(const fs::path& path, const std::string& format) {
  const auto fmt = format_for(path, format);
  if (fmt == DatasetFormat::VerdictsCsv) throw ValidationError("verdict files do not hold statement/text pairs");
  return unwrap(load_pairs(path, fmt), path);
}

std::vector<std::string> ids_of(const std::vector<LabeledPair>& pairs) {
  std::vector<std::string> ids;
  for (const auto& p : pairs) ids.push_back(p.id);
  return ids;
}

std::vector<int> label_codes(const std::vector<LabeledPair>& pairs) {
  std::vector<int> y;
  for (const auto& p : pairs) y.push_back(label_code(p.label));
  return y;
}

bool is_entailment(const std::vector<LabeledPair>& pairs) {
  return !pairs.empty() && std::holds_alternative<EntailLabel>(pairs.front().label);
}

FeatureConfig load_feature_config(Run& run, const std::string& flag) {
  if (auto p = run.optional_path(flag, "features")) return feature_config_from_json(parse_json_file(run.input_path(p->string(), "features")));
  if (run.config.contains("features")) return feature_config_from_json(run.config["features"]);
  throw ValidationError("no feature config: pass --features or set \"features\" in the run config");
}

// Embedding/entity providers declared under "embedders" and "ners".
FeatureProviders build_providers(const Run& run) {
  FeatureProviders out;
  if (run.config.contains("embedders"))
    for (const auto& [name, def] : run.config["embedders"].items()) {
      const auto type = def.value("type", std::string("file"));
      if (type == "file") {
        out.embedders[name] = std::make_shared<FileEmbeddingProvider>(FileEmbeddingProvider::load(
            run.resolve(def.at("table").get<std::string>()), run.resolve(def.at("manifest").get<std::string>())));
      } else if (type == "http") {
        out.embedders[name] = std::make_shared<HttpEmbeddingProvider>(
            def.at("url").get<std::string>(), name, def.at("dimension").get<std::size_t>(),
            std::chrono::milliseconds(def.value("timeout_ms", 30000)));
      } else {
        throw ValidationError("embedder '" + name + "': unknown type '" + type + "'");
      }
    }
  if (run.config.contains("ners"))
    for (const auto& [name, def] : run.config["ners"].items()) {
      const auto type = def.value("type", std::string("file"));
      if (type == "file") {
        out.ners[name] =
            std::make_shared<FileNerProvider>(FileNerProvider::load(run.resolve(def.at("table").get<std::string>()), name));
      } else if (type == "http") {
        out.ners[name] = std::make_shared<HttpNerProvider>(def.at("url").get<std::string>(), name, true,
                                                           std::chrono::milliseconds(def.value("timeout_ms", 30000)));
      } else {
        throw ValidationError("ner '" + name + "': unknown type '" + type + "'");
      }
    }
  return out;
}

void check_resolvable(const FeatureConfig& config, const FeatureProviders& providers) {
  for (const auto& s : config.specs) {
    if (uses_embeddings(s.technique) && !providers.embedders.count(s.provider))
      throw ValidationError("feature " + s.id() + " needs embedder '" + s.provider + "', which is not declared");
    if (uses_entities(s.technique) && s.provider != "heuristic" && !providers.ners.count(s.provider))
      throw ValidationError("feature " + s.id() + " needs ner '" + s.provider + "', which is not declared");
  }
}

fs::path meta_path_for(const fs::path& features_csv) {
  fs::path p = features_csv;
  return p.replace_extension(".meta.json");
}

FeatureMatrix load_feature_matrix(Run& run, const std::string& flag) {
  const auto path = run.input_path(flag, "features_csv");
  const auto meta_path = meta_path_for(path);
  if (!fs::is_regular_file(meta_path)) throw ValidationError("missing " + meta_path.string() + " next to the features");
  const auto config = feature_config_from_json(parse_json_file(meta_path).at("config"));
  auto m = feature_matrix_from_csv(read_file(path), config);
  run.feature_config_hash = m.config_hash;
  return m;
}

ProviderConfig llm_provider(const Run& run, const std::string& endpoint, const std::string& model) {
  json def = run.config.value("provider", json::object());
  if (!endpoint.empty()) def["endpoint"] = endpoint;
  if (!model.empty()) def["model"] = model;
  if (!def.contains("endpoint") || !def.contains("model"))
    throw ValidationError("no language-model provider: set \"provider\" in the run config or pass --endpoint/--model");
  return provider_config_from_json(def);
}

fs::path cache_dir(const Run& run, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (run.config.contains("cache_dir")) return run.resolve(run.config["cache_dir"].get<std::string>());
  return run.out / "cache";
}

json error_json(const char* kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find(',', pos);
    if (end == std::string::npos) end = s.size();
    const auto tok = std::string(trim(std::string_view(s).substr(pos, end - pos)));
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ValidationError("bad size '" + tok + "' in --sizes");
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"claimkit: statement/document similarity, entailment and evaluation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", CLAIMKIT_VERSION);

  std::string config_flag, out_flag;
  std::optional<std::uint64_t> seed_flag;
  std::optional<unsigned> jobs_flag;
  bool validate_only = false;
  app.add_option("--config", config_flag, "JSON run config");
  app.add_option("--out", out_flag, "output directory");
  app.add_option("--seed", seed_flag, "top-level seed");
  app.add_option("--jobs", jobs_flag, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--validate-only", validate_only, "check inputs and exit without writing anything");

  Run run;
  std::function<void()> action;

  // Options shared by several subcommands.
  std::string input, format, fit, features, model_path, predictions, truth, folds, curve;
  std::string classifier_path, kind, endpoint, model_name, cache, tmpl = "entail_v1";
  std::string a_path, b_path, sizes, statement, explanation, asserted = "supported";
  int k = 5;
  std::size_t test_size = 57, top_m = 0;
  bool chronological = false;

  auto* ingest = app.add_subcommand("ingest", "validate and normalize a dataset");
  ingest->add_option("--input", input, "dataset file");
  ingest->add_option("--format", format, "fever-jsonl | pairs-csv | verdicts-csv");
  ingest->callback([&] {
    action = [&] {
      const auto path = run.input_path(input, "input");
      const auto fmt = format_for(path, format);
      json summary{{"format", format.empty() ? std::string(fmt == DatasetFormat::FeverJsonl ? "fever-jsonl" : "pairs-csv") : format}};
      if (fmt == DatasetFormat::VerdictsCsv) {
        const auto verdicts = unwrap(load_verdicts(path), path);
        summary["records"] = verdicts.size();
        run.write("verdicts.csv", serialize_verdicts_csv(verdicts));
      } else {
        const auto pairs = unwrap(load_pairs(path, fmt), path);
        summary["records"] = pairs.size();
        std::map<std::string, std::size_t> counts;
        for (const auto& p : pairs) ++counts[to_string(p.label)];
        summary["labels"] = counts;
        run.write("pairs.jsonl", serialize_pairs_jsonl(pairs));
      }
      run.write("ingest_summary.json", summary.dump(2) + "\n");
    };
  });

  auto* expand = app.add_subcommand("expand-ml", "pair two aligned languages into the four combinations");
  expand->add_option("--a", a_path, "dataset in language a");
  expand->add_option("--b", b_path, "the same dataset in language b");
  expand->add_option("--format", format);
  expand->callback([&] {
    action = [&] {
      const auto pa = load_pair_file(run.input_path(a_path, "a"), format);
      const auto pb = load_pair_file(run.input_path(b_path, "b"), format);
      run.write("pairs.jsonl", serialize_pairs_jsonl(expand_multilingual(pa, pb)));
    };
  });

  auto* split = app.add_subcommand("split", "k-fold or chronological splits");
  split->add_option("--input", input);
  split->add_option("--format", format);
  split->add_option("--k", k, "number of folds");
  split->add_flag("--chronological", chronological, "prefix splits of a verdict file by date");
  split->add_option("--sizes", sizes, "comma-separated training sizes (chronological)");
  split->add_option("--test-size", test_size, "most recent verdicts held out (chronological)");
  split->callback([&] {
    action = [&] {
      const auto path = run.input_path(input, "input");
      if (chronological) {
        const auto verdicts = unwrap(load_verdicts(path), path);
        const auto s = chronological_prefix_splits(verdicts, parse_sizes(sizes), test_size);
        json summary{{"test_size", s.test.size()}, {"train_sizes", json::array()}};
        for (const auto& t : s.train_sets) {
          summary["train_sizes"].push_back(t.size());
          run.write("train_" + std::to_string(t.size()) + ".csv", serialize_verdicts_csv(t));
        }
        run.write("test.csv", serialize_verdicts_csv(s.test));
        run.write("splits.json", summary.dump(2) + "\n");
        return;
      }
      const auto pairs = load_pair_file(path, format);
      const auto splits = make_folds(pairs, k, sub_seed(run.seed, "fold"));
      json summary{{"k", k}, {"seed", run.seed}, {"folds", json::array()}};
      for (const auto& s : splits) {
        const std::string dir = "fold_" + std::to_string(s.fold_index) + "/";
        run.write(dir + "train.jsonl", serialize_pairs_jsonl(s.train));
        run.write(dir + "test.jsonl", serialize_pairs_jsonl(s.test));
        summary["folds"].push_back({{"fold", s.fold_index}, {"train", s.train.size()}, {"test", s.test.size()}});
      }
      run.write("splits.json", summary.dump(2) + "\n");
    };
  });

  auto* grid = app.add_subcommand("grid-search", "rank all TFIDF settings by threshold F1");
  grid->add_option("--train", input, "training pairs (binary labels)");
  grid->add_option("--format", format);
  grid->add_option("--top-m", top_m, "TFIDF settings kept in the default feature config");
  grid->callback([&] {
    action = [&] {
      const auto pairs = load_pair_file(run.input_path(input, "train"), format);
      binary_labels(pairs);
      const auto providers = build_providers(run);
      DefaultConfigOptions opt;
      const json d = run.config.value("default_features", json::object());
      opt.top_m = top_m ? top_m : d.value("top_m", std::size_t{16});
      opt.neg_euclidean_floor = d.value("neg_euclidean_floor", kDefaultNegEuclideanFloor);
      opt.ner_fallback = d.value("ner_fallback", false);
      opt.embedders = d.value("embedders", std::vector<std::string>{});
      opt.translated_embedders = d.value("translated_embedders", std::vector<std::string>{});
      opt.ners = d.value("ners", std::vector<std::string>{});
      opt.translated_ners = d.value("translated_ners", std::vector<std::string>{});
      if (run.validate_only) return;
      const auto ranked = grid_search(pairs, tfidf_grid(), run.jobs);
      run.write("grid_search.csv", grid_results_csv(ranked));
      const auto config = default_feature_config(ranked, opt);
      check_resolvable(config, providers);
      run.feature_config_hash = config_hash(config);
      run.write("feature_config.json", to_json(config).dump(2) + "\n");
    };
  });

  auto* featurize = app.add_subcommand("featurize", "similarity feature matrix for a set of pairs");
  featurize->add_option("--input", input, "pairs to featurize");
  featurize->add_option("--fit", fit, "pairs the TFIDF models are fitted on (default: --input)");
  featurize->add_option("--format", format);
  featurize->add_option("--features", features, "feature config JSON");
  featurize->callback([&] {
    action = [&] {
      const auto pairs = load_pair_file(run.input_path(input, "input"), format);
      const auto fit_pairs = fit.empty() && !run.optional_path("", "fit") ? pairs
                                                                          : load_pair_file(run.input_path(fit, "fit"), format);
      const auto config = load_feature_config(run, features);
      auto providers = build_providers(run);
      check_resolvable(config, providers);
      run.feature_config_hash = config_hash(config);
      if (run.validate_only) return;
      const auto corpus = fitting_corpus(fit_pairs);
      fit_tfidf_models(config, corpus, providers);
      const auto m = featurize_set(pairs, config, providers, run.jobs);
      run.write("features.csv", feature_matrix_to_csv(m));
      const json tfidf_fit{{"texts", "distinct statements and documents of the fit pairs"},
                           {"fit_pairs", fit_pairs.size()},
                           {"corpus_size", corpus.size()}};
      run.write("features.meta.json",
                json{{"config", to_json(config)}, {"config_hash", m.config_hash}, {"tfidf_fit", tfidf_fit}}.dump(2) + "\n");
    };
  });

  auto* train = app.add_subcommand("train", "train a classifier on a feature matrix");
  train->add_option("--features", features, "features.csv written by featurize");
  train->add_option("--classifier", classifier_path, "classifier spec JSON");
  train->add_option("--kind", kind, "classifier kind (overrides the spec)");
  train->callback([&] {
    action = [&] {
      const auto m = load_feature_matrix(run, features);
      json spec_json = json::object();
      if (auto p = run.optional_path(classifier_path, "classifier"))
        spec_json = parse_json_file(run.input_path(p->string(), "classifier"));
      else if (run.config.contains("classifier"))
        spec_json = run.config["classifier"];
      if (!kind.empty()) spec_json["kind"] = kind;
      if (!spec_json.contains("kind")) throw ValidationError("no classifier kind: pass --kind or --classifier");
      spec_json["seed"] = sub_seed(run.seed, "forest");
      const auto spec = classifier_spec_from_json(spec_json);
      if (run.validate_only) return;
      const auto trained = train_classifier(spec, m, run.jobs);
      run.write("model.json", to_json(trained).dump(2) + "\n");

      json summary{{"classifier", to_string(spec.kind)}, {"samples", m.size()}, {"features", json::array()}};
      const auto importance = permutation_importance(trained, m, sub_seed(run.seed, "perm"));
      for (std::size_t f = 0; f < m.width(); ++f) {
        std::vector<double> col;
        for (const auto& r : m.rows) col.push_back(r[f]);
        const auto base = threshold_baseline(col, m.labels);
        summary["features"].push_back({{"id", m.spec_ids[f]},
                                       {"threshold", std::isfinite(base.threshold) ? json(base.threshold) : json(nullptr)},
                                       {"threshold_f1", base.f1},
                                       {"importance", importance[f]}});
      }
      summary["training_f1"] = prf1(m.labels, predict(trained, m), 1).f1;
      run.write("train_summary.json", summary.dump(2) + "\n");
    };
  });

  auto* predict_cmd = app.add_subcommand("predict", "apply a trained model to a feature matrix");
  predict_cmd->add_option("--model", model_path, "model.json written by train");
  predict_cmd->add_option("--features", features, "features.csv written by featurize");
  predict_cmd->callback([&] {
    action = [&] {
      const auto model = trained_model_from_json(parse_json_file(run.input_path(model_path, "model")));
      const auto m = load_feature_matrix(run, features);
      if (model.config_hash != m.config_hash)
        throw ValidationError("features were built with a different feature config than the model");
      if (run.validate_only) return;
      const auto labels = predict(model, m);
      std::vector<Prediction> preds;
      for (std::size_t i = 0; i < labels.size(); ++i) preds.push_back({m.pair_ids[i], labels[i]});
      run.write("predictions.csv", predictions_to_csv(preds));
    };
  });

  // evaluate and report share one renderer; evaluate insists on predictions.
  auto report_action = [&](bool need_predictions) {
    return [&, need_predictions] {
      ReportInput in;
      in.title = need_predictions ? "Evaluation" : "Report";
      in.context = {{"seed", run.seed}};
      const auto truth_path = run.optional_path(truth, "truth");
      const auto pred_path = run.optional_path(predictions, "predictions");
      if (need_predictions && (!truth_path || !pred_path))
        throw ValidationError("evaluate needs --truth and --predictions");
      if (truth_path || pred_path) {
        const auto pairs = load_pair_file(run.input_path(truth, "truth"), format);
        const bool entail = is_entailment(pairs);
        const auto preds = ingest_predictions(run.input_path(predictions, "predictions"),
                                              entail ? LabelTaxonomy::Entailment : LabelTaxonomy::Similarity, ids_of(pairs));
        in.y_true = label_codes(pairs);
        for (const auto& p : preds) in.y_pred.push_back(p.label);
        if (entail) {
          in.classes = {0, 1, 2};
          in.class_names = {{0, "SUPPORTS"}, {1, "REFUTES"}, {2, "NOT ENOUGH INFO"}};
        } else {
          in.classes = {0, 1};
          in.class_names = {{0, "Off-topic"}, {1, "Mention"}};
        }
      }
      if (auto p = run.optional_path(folds, "folds")) in.folds = fold_table_from_csv(read_file(run.input_path(p->string(), "folds")));
      if (auto p = run.optional_path(curve, "curve")) {
        const auto rows = csv::parse(read_file(run.input_path(p->string(), "curve")));
        if (!rows.empty()) {
          const csv::Header h(rows.front());
          for (std::size_t i = 1; i < rows.size(); ++i) {
            try {
              in.curve.push_back({static_cast<std::size_t>(std::stoull(h.get(rows[i], "n_train"))),
                                  std::stod(h.get(rows[i], "accuracy"))});
            } catch (const std::logic_error&) {
              throw ValidationError("line " + std::to_string(rows[i].line) + ": malformed learning-curve row");
            }
          }
        }
      }
      if (in.y_true.empty() && in.folds.empty() && in.curve.empty())
        throw ValidationError("nothing to report: pass --truth/--predictions, --folds or --curve");
      const auto bundle = render_report(in);
      if (run.validate_only) return;
      run.write("metrics.json", bundle.metrics_json);
      run.write("confusion.csv", bundle.confusion_csv);
      run.write("folds.csv", bundle.folds_csv);
      run.write("learning_curve.csv", bundle.learning_curve_csv);
      run.write("report.md", bundle.report_md);
    };
  };

  for (auto [name, need] : {std::pair{"evaluate", true}, std::pair{"report", false}}) {
    auto* sub = app.add_subcommand(name, need ? "score predictions against a labeled split"
                                              : "render a report bundle from fold tables, curves and predictions");
    sub->add_option("--truth", truth, "labeled pairs");
    sub->add_option("--predictions", predictions, "CSV id,label aligned with --truth");
    sub->add_option("--format", format);
    sub->add_option("--folds", folds, "CSV train,test,fold,accuracy (percent)");
    sub->add_option("--curve", curve, "CSV n_train,accuracy");
    sub->callback([&, need = need] { action = report_action(need); });
  }

  auto add_provider_flags = [&](CLI::App* sub) {
    sub->add_option("--endpoint", endpoint, "chat-completion URL");
    sub->add_option("--model", model_name, "model identifier");
    sub->add_option("--cache", cache, "response cache directory");
  };

  auto* entail = app.add_subcommand("entail", "ask a language model for entailment labels");
  entail->add_option("--input", input, "pairs");
  entail->add_option("--format", format);
  entail->add_option("--template", tmpl, "entail_v1 | entail_v2");
  add_provider_flags(entail);
  entail->callback([&] {
    action = [&] {
      const auto pairs = load_pair_file(run.input_path(input, "input"), format);
      const auto id = parse_template_id(tmpl);
      if (id != TemplateId::EntailV1 && id != TemplateId::EntailV2)
        throw ValidationError("entail takes entail_v1 or entail_v2");
      const auto provider = llm_provider(run, endpoint, model_name);
      if (run.validate_only) return;
      ResponseCache rc(cache_dir(run, cache));
      ProviderClient client(provider, &rc);
      std::vector<std::string> prompts;
      for (const auto& p : pairs) prompts.push_back(build_entailment_prompt(id, p.claim, p.text));
      const auto answers = client.query_batch(prompts, run.jobs);
      std::vector<Prediction> preds;
      std::string responses;
      std::size_t unparsed = 0;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        json rec{{"id", pairs[i].id}, {"template", tmpl}, {"response", answers[i].text}};
        try {
          const auto a = parse_entailment_response(answers[i].text);
          rec["label"] = static_cast<int>(a.label);
          rec["rationale"] = a.rationale;
          preds.push_back({pairs[i].id, static_cast<int>(a.label)});
        } catch (const UnparseableResponseError& e) {
          rec["error"] = e.what();
          ++unparsed;
        }
        responses += rec.dump() + "\n";
      }
      run.write("predictions.csv", predictions_to_csv(preds));
      run.write("responses.jsonl", responses);
      run.write("entail_summary.json", json{{"pairs", pairs.size()},
                                            {"parsed", preds.size()},
                                            {"unparseable", unparsed},
                                            {"template", tmpl},
                                            {"model", provider.model}}
                                           .dump(2) + "\n");
    };
  });

  auto* categorize = app.add_subcommand("categorize", "ask a language model for verdict categories");
  categorize->add_option("--input", input, "verdicts CSV");
  add_provider_flags(categorize);
  categorize->callback([&] {
    action = [&] {
      const auto path = run.input_path(input, "input");
      const auto verdicts = unwrap(load_verdicts(path), path);
      const auto provider = llm_provider(run, endpoint, model_name);
      if (run.validate_only) return;
      ResponseCache rc(cache_dir(run, cache));
      ProviderClient client(provider, &rc);
      std::vector<std::string> prompts;
      for (const auto& v : verdicts) prompts.push_back(build_verdict_prompt(v.verdict_text));
      const auto answers = client.query_batch(prompts, run.jobs);
      std::string out;
      csv::append_row(out, {"id", "predicted", "expected"});
      std::size_t scored = 0, hits = 0, unparsed = 0;
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        std::string predicted;
        try {
          predicted = to_string(parse_verdict_category(answers[i].text));
        } catch (const UnparseableResponseError&) {
          ++unparsed;
        }
        const auto expected = prompt_category_of(verdicts[i].category);
        const std::string exp = expected ? std::string(to_string(*expected)) : "";
        if (expected) {
          ++scored;
          hits += predicted == exp;
        }
        csv::append_row(out, {verdicts[i].id, predicted, exp});
      }
      run.write("categories.csv", out);
      json summary{{"verdicts", verdicts.size()}, {"scored", scored}, {"unparseable", unparsed}};
      summary["accuracy"] = scored ? json(static_cast<double>(hits) / static_cast<double>(scored)) : json(nullptr);
      run.write("categorize_summary.json", summary.dump(2) + "\n");
    };
  });

  auto* treatment = app.add_subcommand("treatment", "ask a language model how content treats a statement");
  treatment->add_option("--input", input, "JSONL {id, statement, content[, orientation, subject, argumentation]}");
  add_provider_flags(treatment);
  treatment->callback([&] {
    action = [&] {
      const auto path = run.input_path(input, "input");
      struct Item {
        std::string id, statement, content;
        std::optional<TreatmentLabel> truth;
      };
      std::vector<Item> items;
      const std::string content = read_utf8_file(path);
      std::size_t pos = 0, line = 0;
      while (pos < content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        const auto text = std::string_view(content).substr(pos, end - pos);
        pos = end + 1;
        ++line;
        if (trim(text).empty()) continue;
        try {
          const auto j = json::parse(text);
          Item it{j.at("id").get<std::string>(), j.at("statement").get<std::string>(), j.at("content").get<std::string>(), {}};
          if (j.contains("orientation")) {
            const auto o = parse_orientation(j.at("orientation").get<std::string>());
            const auto s = parse_subject(j.at("subject").get<std::string>());
            const auto a = parse_argumentation(j.at("argumentation").get<std::string>());
            if (!o || !s || !a) throw ValidationError("unknown treatment label");
            it.truth = TreatmentLabel{*o, *s, *a};
          }
          items.push_back(std::move(it));
        } catch (const std::exception& e) {
          throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
      }
      const auto provider = llm_provider(run, endpoint, model_name);
      if (run.validate_only) return;
      ResponseCache rc(cache_dir(run, cache));
      ProviderClient client(provider, &rc);
      std::vector<std::string> prompts;
      for (const auto& it : items) prompts.push_back(build_treatment_prompt(it.statement, it.content));
      const auto answers = client.query_batch(prompts, run.jobs);
      std::string out;
      std::vector<TreatmentLabel> truths, preds;
      std::size_t unparsed = 0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        json rec{{"id", items[i].id}, {"template", "treatment_v1"}, {"response", answers[i].text}};
        try {
          const auto t = parse_treatment_response(answers[i].text);
          rec["orientation"] = to_string(t.orientation);
          rec["subject"] = to_string(t.subject);
          rec["argumentation"] = to_string(t.argumentation);
          if (items[i].truth) {
            truths.push_back(*items[i].truth);
            preds.push_back(t);
          }
        } catch (const UnparseableResponseError& e) {
          rec["error"] = e.what();
          ++unparsed;
        }
        out += rec.dump() + "\n";
      }
      run.write("treatments.jsonl", out);
      json summary{{"items", items.size()}, {"unparseable", unparsed}, {"template", "treatment_v1"}};
      if (!truths.empty()) summary["strata"] = to_json(strata_evaluation(truths, preds));
      run.write("treatment_summary.json", summary.dump(2) + "\n");
    };
  });

  auto* clarity = app.add_subcommand("clarity", "check whether a verdict explanation settles its statement");
  clarity->add_option("--statement", statement)->required();
  clarity->add_option("--explanation", explanation)->required();
  clarity->add_option("--asserted", asserted, "verdict asserted by the fact-checker: supported | refuted");
  add_provider_flags(clarity);
  clarity->callback([&] {
    action = [&] {
      const auto claimed = parse_entail_label(asserted);
      if (!claimed) throw ValidationError("unknown --asserted label '" + asserted + "'");
      const auto provider = llm_provider(run, endpoint, model_name);
      if (run.validate_only) return;
      ResponseCache rc(cache_dir(run, cache));
      ProviderClient client(provider, &rc);
      const auto r = clarity_check(statement, explanation, client, *claimed);
      const json j{{"label", to_string(r.label)},
                   {"rationale", r.rationale},
                   {"insufficient_explanation", r.insufficient_explanation}};
      std::cout << j.dump() << "\n";
      run.write("clarity.json", j.dump(2) + "\n");
    };
  });

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::Success& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << error_json("usage", e.what()).dump() << "\n";
      return 1;
    }

    run.started_at = utc_now();
    run.command = app.get_subcommands().front()->get_name();
    for (int i = 1; i < argc; ++i) run.argv.emplace_back(argv[i]);
    run.validate_only = validate_only;
    if (!config_flag.empty()) {
      const fs::path cp(config_flag);
      if (!fs::is_regular_file(cp)) throw ValidationError("config '" + config_flag + "' does not exist");
      const std::string text = read_file(cp);
      run.config_sha256 = sha256_hex(text);
      try {
        run.config = json::parse(text);
      } catch (const json::exception& e) {
        throw ValidationError(config_flag + ": " + e.what());
      }
      if (!run.config.is_object()) throw ValidationError("run config must be a JSON object");
      run.config_dir = cp.parent_path().empty() ? fs::path(".") : cp.parent_path();
    }
    run.seed = seed_flag ? *seed_flag : run.config.value("seed", std::uint64_t{0});
    run.jobs = jobs_flag ? *jobs_flag : run.config.value("jobs", 1u);
    if (run.jobs < 1) throw ValidationError("jobs must be at least 1");
    run.out = !out_flag.empty() ? fs::path(out_flag)
                                : run.config.contains("output_dir") ? run.resolve(run.config["output_dir"].get<std::string>())
                                                                    : fs::path("out");

    action();
    run.write_manifest();
    if (run.validate_only) std::cout << json{{"valid", true}, {"command", run.command}}.dump() << "\n";
    return 0;
  } catch (const RecordsError& e) {
    json j = error_json(e.kind(), e.what());
    for (const auto& r : e.records()) j["error"]["records"].push_back({{"line", r.line}, {"message", r.message}});
    std::cerr << j.dump() << "\n";
    return 1;
  } catch (const TransportError& e) {
    std::cerr << error_json(e.kind(), e.what()).dump() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << error_json(e.kind(), e.what()).dump() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << error_json("validation", e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what()).dump() << "\n";
    return 1;
  }
}
