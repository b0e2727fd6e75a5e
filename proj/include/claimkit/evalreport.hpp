#pragma once

// Fold tables, learning curves, treatment-strata scoring and the report
// bundle (metrics.json, confusion.csv, folds.csv, learning_curve.csv,
// report.md).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "claimkit/csv.hpp"
#include "claimkit/entailment.hpp"
#include "claimkit/error.hpp"
#include "claimkit/metrics.hpp"
#include "claimkit/util.hpp"

namespace claimkit {

// ---------------------------------------------------------------------------
// Per-fold cross-evaluation

struct FoldRow {
  std::string train;
  std::string test;
  int fold = 0;
  double accuracy = 0.0;  // percent
};

using FoldTable = std::vector<FoldRow>;

inline void validate_fold_table(const FoldTable& table) {
  std::set<std::tuple<std::string, std::string, int>> keys;
  for (const auto& r : table) {
    if (!(r.accuracy >= 0.0 && r.accuracy <= 100.0))
      throw ValidationError("fold accuracy " + format_double(r.accuracy) + " outside [0,100]");
    if (!keys.emplace(r.train, r.test, r.fold).second)
      throw ValidationError("duplicate fold row (" + r.train + ", " + r.test + ", " + std::to_string(r.fold) + ")");
  }
}

struct FoldSummary {
  std::string train;
  std::string test;
  std::size_t folds = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

// One summary per (train, test) group, ordered by group key.
inline std::vector<FoldSummary> fold_summary(const FoldTable& table) {
  validate_fold_table(table);
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : table) groups[{r.train, r.test}].push_back(r.accuracy);
  std::vector<FoldSummary> out;
  for (auto& [key, values] : groups) {
    if (values.empty()) throw ValidationError("empty fold group " + key.first + "/" + key.second);
    // Sorted summation keeps the mean independent of row order.
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    out.push_back({key.first, key.second, values.size(), mean, std::sqrt(ss / n)});
  }
  return out;
}

inline FoldTable fold_table_from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  FoldTable table;
  if (rows.empty()) return table;
  const csv::Header h(rows.front());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    try {
      table.push_back({std::string(h.get(rows[i], "train")), std::string(h.get(rows[i], "test")),
                       std::stoi(std::string(h.get(rows[i], "fold"))), std::stod(std::string(h.get(rows[i], "accuracy")))});
    } catch (const std::logic_error&) {
      throw ValidationError("line " + std::to_string(rows[i].line) + ": malformed fold row");
    }
  }
  return table;
}

inline std::string fold_table_to_csv(const FoldTable& table) {
  std::string out;
  csv::append_row(out, {"train", "test", "fold", "accuracy"});
  for (const auto& r : table) csv::append_row(out, {r.train, r.test, std::to_string(r.fold), format_double(r.accuracy)});
  return out;
}

// ---------------------------------------------------------------------------
// Learning curves

struct CurvePoint {
  std::size_t n_train = 0;
  double accuracy = 0.0;
};

inline std::vector<CurvePoint> learning_curve(std::vector<CurvePoint> points) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.n_train < b.n_train; });
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].n_train == points[i - 1].n_train)
      throw ValidationError("duplicate n_train " + std::to_string(points[i].n_train));
  return points;
}

inline std::string learning_curve_csv(const std::vector<CurvePoint>& points) {
  std::string out;
  csv::append_row(out, {"n_train", "accuracy"});
  for (const auto& p : learning_curve(points)) csv::append_row(out, {std::to_string(p.n_train), format_double(p.accuracy)});
  return out;
}

// ---------------------------------------------------------------------------
// Content-treatment strata

struct StratumScore {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
};

struct StrataReport {
  StratumScore orientation;
  StratumScore subject;
  StratumScore argumentation;
  double all = 0.0;  // share of samples with every stratum right
};

inline StrataReport strata_evaluation(const std::vector<TreatmentLabel>& truths, const std::vector<TreatmentLabel>& preds) {
  if (truths.size() != preds.size())
    throw ValidationError("length mismatch: " + std::to_string(truths.size()) + " truths vs " +
                          std::to_string(preds.size()) + " predictions");
  if (truths.empty()) throw ValidationError("metrics need at least one sample");
  auto column = [](const std::vector<TreatmentLabel>& v, auto field) {
    std::vector<int> out;
    out.reserve(v.size());
    for (const auto& t : v) out.push_back(static_cast<int>(t.*field));
    return out;
  };
  auto score = [&](auto field) {
    const auto t = column(truths, field), p = column(preds, field);
    return StratumScore{accuracy(t, p), balanced_accuracy(t, p)};
  };
  StrataReport r;
  r.orientation = score(&TreatmentLabel::orientation);
  r.subject = score(&TreatmentLabel::subject);
  r.argumentation = score(&TreatmentLabel::argumentation);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) exact += truths[i] == preds[i];
  r.all = static_cast<double>(exact) / static_cast<double>(truths.size());
  return r;
}

inline nlohmann::json to_json(const StrataReport& r) {
  auto s = [](const StratumScore& x) {
    return nlohmann::json{{"accuracy", x.accuracy}, {"balanced_accuracy", x.balanced_accuracy}};
  };
  return {{"orientation", s(r.orientation)},
          {"subject", s(r.subject)},
          {"argumentation", s(r.argumentation)},
          {"all", r.all}};
}

// ---------------------------------------------------------------------------
// Report bundle

struct ReportInput {
  std::string title = "Evaluation";
  std::vector<int> classes;  // confusion order; derived from the labels when empty
  std::map<int, std::string> class_names;
  std::vector<int> y_true;
  std::vector<int> y_pred;
  FoldTable folds;
  std::vector<CurvePoint> curve;
  std::optional<StrataReport> strata;
  nlohmann::json context = nlohmann::json::object();  // seed, config hash, model, ...
};

inline nlohmann::json classification_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                             const std::vector<int>& classes) {
  nlohmann::json j{{"n_samples", y_true.size()},
                   {"accuracy", accuracy(y_true, y_pred)},
                   {"balanced_accuracy", balanced_accuracy(y_true, y_pred)}};
  nlohmann::json per_class = nlohmann::json::object();
  for (int c : classes) {
    const auto m = prf1(y_true, y_pred, c);
    per_class[std::to_string(c)] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  }
  j["per_class"] = per_class;
  if (classes == std::vector<int>{0, 1}) {
    const auto m = prf1(y_true, y_pred, 1);
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
  }
  return j;
}

namespace detail {

inline std::string pct(double proportion) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", proportion * 100.0);
  return buf;
}

inline std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string class_name(const ReportInput& in, int c) {
  auto it = in.class_names.find(c);
  return it == in.class_names.end() ? std::to_string(c) : it->second;
}

}  // namespace detail

struct ReportBundle {
  std::string metrics_json;
  std::string confusion_csv;
  std::string folds_csv;
  std::string learning_curve_csv;
  std::string report_md;
};

// Pure rendering: identical input gives identical bytes.
inline ReportBundle render_report(const ReportInput& in) {
  std::vector<int> classes = in.classes;
  if (classes.empty()) {
    std::set<int> seen(in.y_true.begin(), in.y_true.end());
    seen.insert(in.y_pred.begin(), in.y_pred.end());
    classes.assign(seen.begin(), seen.end());
  }
  const bool has_predictions = !in.y_true.empty() || !in.y_pred.empty();

  nlohmann::json metrics{{"title", in.title}, {"context", in.context}};
  std::optional<ConfusionMatrix> cm;
  if (has_predictions) {
    metrics["classification"] = classification_metrics(in.y_true, in.y_pred, classes);
    cm = confusion(in.y_true, in.y_pred, classes);
  }
  const auto summaries = fold_summary(in.folds);
  if (!in.folds.empty()) {
    nlohmann::json fs = nlohmann::json::array();
    for (const auto& s : summaries)
      fs.push_back({{"train", s.train}, {"test", s.test}, {"folds", s.folds}, {"mean", s.mean}, {"std", s.std}});
    metrics["folds"] = fs;
  }
  const auto curve = learning_curve(in.curve);
  if (!curve.empty()) {
    nlohmann::json lc = nlohmann::json::array();
    for (const auto& p : curve) lc.push_back({{"n_train", p.n_train}, {"accuracy", p.accuracy}});
    metrics["learning_curve"] = lc;
  }
  if (in.strata) metrics["strata"] = to_json(*in.strata);

  ReportBundle b;
  b.metrics_json = metrics.dump(2) + "\n";

  std::vector<std::string> header{"true\\pred"};
  for (int c : classes) header.push_back(detail::class_name(in, c));
  csv::append_row(b.confusion_csv, header);
  if (cm)
    for (std::size_t t = 0; t < classes.size(); ++t) {
      std::vector<std::string> row{detail::class_name(in, classes[t])};
      for (auto n : cm->counts[t]) row.push_back(std::to_string(n));
      csv::append_row(b.confusion_csv, row);
    }
  b.folds_csv = fold_table_to_csv(in.folds);
  b.learning_curve_csv = learning_curve_csv(curve);

  std::string md = "# " + in.title + "\n\n";
  if (!in.context.empty()) {
    md += "| Setting | Value |\n|---|---|\n";
    for (const auto& [k, v] : in.context.items()) md += "| " + k + " | " + (v.is_string() ? v.get<std::string>() : v.dump()) + " |\n";
    md += "\n";
  }
  if (has_predictions) {
    const auto& c = metrics["classification"];
    md += "## Classification\n\n| Samples | Accuracy (%) | Balanced Accuracy (%) |\n|---|---|---|\n";
    md += "| " + std::to_string(in.y_true.size()) + " | " + detail::pct(c["accuracy"].get<double>()) + " | " +
          detail::pct(c["balanced_accuracy"].get<double>()) + " |\n\n";
    md += "| Class | Precision | Recall | F1 |\n|---|---|---|---|\n";
    for (int k : classes) {
      const auto& m = c["per_class"][std::to_string(k)];
      md += "| " + detail::class_name(in, k) + " | " + detail::fixed(m["precision"].get<double>(), 4) + " | " +
            detail::fixed(m["recall"].get<double>(), 4) + " | " + detail::fixed(m["f1"].get<double>(), 4) + " |\n";
    }
    md += "\n## Confusion matrix\n\nRows are true classes, columns predicted classes.\n\n|   |";
    for (int k : classes) md += " " + detail::class_name(in, k) + " |";
    md += "\n|---|";
    for (std::size_t i = 0; i < classes.size(); ++i) md += "---|";
    md += "\n";
    for (std::size_t t = 0; t < classes.size(); ++t) {
      md += "| " + detail::class_name(in, classes[t]) + " |";
      for (auto n : cm->counts[t]) md += " " + std::to_string(n) + " |";
      md += "\n";
    }
    md += "\n";
  }
  if (!summaries.empty()) {
    md += "## Folds\n\n| Train | Test | Folds | Mean (%) | Std (%) |\n|---|---|---|---|---|\n";
    for (const auto& s : summaries)
      md += "| " + s.train + " | " + s.test + " | " + std::to_string(s.folds) + " | " + detail::fixed(s.mean, 2) +
            " | " + detail::fixed(s.std, 2) + " |\n";
    md += "\n";
  }
  if (!curve.empty()) {
    md += "## Learning curve\n\n| Training samples | Accuracy (%) |\n|---|---|\n";
    for (const auto& p : curve) md += "| " + std::to_string(p.n_train) + " | " + detail::pct(p.accuracy) + " |\n";
    md += "\n";
  }
  if (in.strata) {
    const auto& s = *in.strata;
    md += "## Content treatment\n\n| Orientation | Subject | Argumentation | All |\n|---|---|---|---|\n";
    auto cell = [](const StratumScore& x) { return detail::pct(x.accuracy) + " / " + detail::pct(x.balanced_accuracy); };
    md += "| " + cell(s.orientation) + " | " + cell(s.subject) + " | " + cell(s.argumentation) + " | " +
          detail::pct(s.all) + " |\n\nCells are accuracy / balanced accuracy (%).\n\n";
  }
  b.report_md = md;
  return b;
}

inline void write_report_bundle(const std::filesystem::path& dir, const ReportBundle& b) {
  write_file(dir / "metrics.json", b.metrics_json);
  write_file(dir / "confusion.csv", b.confusion_csv);
  write_file(dir / "folds.csv", b.folds_csv);
  write_file(dir / "learning_curve.csv", b.learning_curve_csv);
  write_file(dir / "report.md", b.report_md);
}

inline constexpr std::array<const char*, 5> kReportFiles = {"metrics.json", "confusion.csv", "folds.csv",
                                                            "learning_curve.csv", "report.md"};

}  // namespace claimkit
