#include <gtest/gtest.h>

#include <filesystem>

#include "claimkit/evalreport.hpp"
#include "oracles.hpp"

using namespace claimkit;

namespace {

FoldTable folds_of(const std::string& train, const std::string& test, const std::vector<double>& accs) {
  FoldTable t;
  for (std::size_t i = 0; i < accs.size(); ++i) t.push_back({train, test, static_cast<int>(i + 1), accs[i]});
  return t;
}

std::vector<int> random_labels(Rng& rng, std::size_t n, int k) {
  std::vector<int> v(n);
  for (auto& x : v) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
  return v;
}

}  // namespace

TEST(Metrics, Examples) {
  const auto m = prf1(std::vector<int>{1, 1, 0}, std::vector<int>{1, 0, 0});
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
  const auto none = prf1(std::vector<int>{1, 0, 1}, std::vector<int>{0, 0, 0});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);

  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 1, 0}), 0.75);
  EXPECT_DOUBLE_EQ(balanced_accuracy(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 1, 0}), 0.75);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{0, 0, 0, 1}, std::vector<int>{0, 0, 0, 0}), 0.75);
  EXPECT_DOUBLE_EQ(balanced_accuracy(std::vector<int>{0, 0, 0, 1}, std::vector<int>{0, 0, 0, 0}), 0.5);

  const auto anti = confusion(std::vector<int>{0, 1}, std::vector<int>{1, 0}, {0, 1});
  EXPECT_EQ(anti.counts, (std::vector<std::vector<std::size_t>>{{0, 1}, {1, 0}}));
  EXPECT_THROW(confusion(std::vector<int>{0, 2}, std::vector<int>{0, 0}, {0, 1}), ValidationError);
  EXPECT_THROW(accuracy(std::vector<int>{0}, std::vector<int>{0, 1}), ValidationError);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), ValidationError);
}

TEST(Metrics, MatchBruteForceOnRandomVectors) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const std::size_t n = 1 + rng.below(60);
    const auto t = random_labels(rng, n, k), p = random_labels(rng, n, k);
    EXPECT_NEAR(accuracy(t, p), oracle::accuracy(t, p), 1e-12);
    EXPECT_NEAR(balanced_accuracy(t, p), oracle::balanced_accuracy(t, p), 1e-12);
    for (int c = 0; c < k; ++c) {
      const auto m = prf1(t, p, c);
      const auto o = oracle::prf(t, p, c);
      EXPECT_NEAR(m.precision, o.p, 1e-12);
      EXPECT_NEAR(m.recall, o.r, 1e-12);
      EXPECT_NEAR(m.f1, o.f, 1e-12);
    }
    std::vector<int> classes(k);
    for (int c = 0; c < k; ++c) classes[c] = c;
    const auto cm = confusion(t, p, classes);
    EXPECT_EQ(cm.counts, oracle::confusion(t, p, classes));
    std::size_t total = 0, trace = 0;
    for (std::size_t i = 0; i < cm.counts.size(); ++i)
      for (std::size_t j = 0; j < cm.counts.size(); ++j) {
        total += cm.counts[i][j];
        if (i == j) trace += cm.counts[i][j];
      }
    EXPECT_EQ(total, n);
    EXPECT_NEAR(static_cast<double>(trace) / n, accuracy(t, p), 1e-12);
  }
}

TEST(FoldSummary, PublishedAggregates) {
  FoldTable table = folds_of("FEVER", "FEVER", {89.51, 99.70, 99.66, 99.37, 99.64});
  for (const auto& r : folds_of("FEVER-it", "FEVER", {81.84, 75.96, 83.85, 83.25, 83.36})) table.push_back(r);
  for (const auto& r : folds_of("FEVER-ml", "FEVER", {78.49, 80.92, 86.87, 86.45, 85.83})) table.push_back(r);
  const auto s = fold_summary(table);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].train, "FEVER");
  EXPECT_NEAR(s[0].mean, 97.58, 0.01);
  EXPECT_NEAR(s[0].std, 4.04, 0.01);
  EXPECT_EQ(s[1].train, "FEVER-it");
  EXPECT_NEAR(s[1].mean, 81.65, 0.01);
  EXPECT_NEAR(s[1].std, 2.92, 0.01);
  EXPECT_NEAR(s[2].mean, 83.71, 0.01);
  EXPECT_NEAR(s[2].std, 3.38, 0.01);
}

TEST(FoldSummary, EdgeCases) {
  const auto one = fold_summary(folds_of("a", "b", {42.0}));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].std, 0.0);
  EXPECT_TRUE(fold_summary({}).empty());
  EXPECT_THROW(fold_summary(folds_of("a", "b", {101.0})), ValidationError);
  auto dup = folds_of("a", "b", {1.0, 2.0});
  dup[1].fold = 1;
  EXPECT_THROW(fold_summary(dup), ValidationError);

  // Row order does not change the aggregate bytes.
  auto table = folds_of("FEVER", "FEVER", {89.51, 99.70, 99.66, 99.37, 99.64});
  auto reversed = table;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(fold_summary(table)[0].mean, fold_summary(reversed)[0].mean);
}

TEST(FoldSummary, CsvRoundTrip) {
  const auto table = folds_of("FEVER", "FEVER-it", {86.86, 90.43, 85.95});
  const auto back = fold_table_from_csv(fold_table_to_csv(table));
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].test, "FEVER-it");
  EXPECT_EQ(back[1].fold, 2);
  EXPECT_EQ(back[1].accuracy, 90.43);
  EXPECT_THROW(fold_table_from_csv("train,test,fold,accuracy\na,b,x,1\n"), ValidationError);
}

TEST(LearningCurve, SortedAndUnique) {
  const auto c = learning_curve({{150, 0.84}, {30, 0.6}, {90, 0.78}});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].n_train, 30u);
  EXPECT_EQ(c[2].n_train, 150u);
  EXPECT_EQ(learning_curve_csv({{150, 0.84}, {30, 0.6}}), "n_train,accuracy\n30,0.6\n150,0.84\n");
  EXPECT_THROW(learning_curve({{30, 0.5}, {30, 0.6}}), ValidationError);
}

TEST(Strata, AllIsExactMatchShare) {
  using O = Orientation;
  using S = Subject;
  using A = Argumentation;
  const std::vector<TreatmentLabel> truth = {{O::Neutral, S::Direct, A::Shallow},
                                             {O::Confuting, S::Indirect, A::Explained},
                                             {O::Reinforcing, S::Fiction, A::Explained},
                                             {O::Neutral, S::Direct, A::Explained}};
  const std::vector<TreatmentLabel> pred = {{O::Neutral, S::Direct, A::Shallow},
                                            {O::Confuting, S::Direct, A::Explained},
                                            {O::Neutral, S::Fiction, A::Explained},
                                            {O::Neutral, S::Direct, A::Shallow}};
  const auto r = strata_evaluation(truth, pred);
  EXPECT_DOUBLE_EQ(r.orientation.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.subject.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.argumentation.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.all, 0.25);
  // Orientation recalls: neutral 1, confuting 1, reinforcing 0.
  EXPECT_DOUBLE_EQ(r.orientation.balanced_accuracy, 2.0 / 3.0);
  EXPECT_THROW(strata_evaluation(truth, {}), ValidationError);
}

TEST(Report, DeterministicAndComplete) {
  ReportInput in;
  in.title = "Sample";
  in.class_names = {{0, "Off-topic"}, {1, "Mention"}};
  in.y_true = {1, 1, 0, 0, 1, 0};
  in.y_pred = {1, 0, 0, 0, 1, 1};
  in.folds = folds_of("A", "A", {90.0, 80.0});
  in.curve = {{150, 0.84}, {30, 0.6}};
  in.context = {{"seed", 7}};
  const auto a = render_report(in), b = render_report(in);
  EXPECT_EQ(a.metrics_json, b.metrics_json);
  EXPECT_EQ(a.report_md, b.report_md);
  EXPECT_EQ(a.confusion_csv, "true\\pred,Off-topic,Mention\nOff-topic,2,1\nMention,1,2\n");

  const auto m = nlohmann::json::parse(a.metrics_json);
  EXPECT_DOUBLE_EQ(m["classification"]["accuracy"].get<double>(), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(m["classification"]["f1"].get<double>(), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m["folds"][0]["std"].get<double>(), 5.0);
  EXPECT_NE(a.report_md.find("| 150 | 84.00 |"), std::string::npos);
  EXPECT_NE(a.report_md.find("| A | A | 2 | 85.00 | 5.00 |"), std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "claimkit_report_bundle";
  std::filesystem::remove_all(dir);
  write_report_bundle(dir, a);
  for (const char* f : kReportFiles) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::filesystem::remove_all(dir);
}

TEST(Report, EmptySectionsStillRender) {
  ReportInput in;
  const auto b = render_report(in);
  EXPECT_EQ(b.folds_csv, "train,test,fold,accuracy\n");
  EXPECT_EQ(b.learning_curve_csv, "n_train,accuracy\n");
  EXPECT_EQ(b.report_md, "# Evaluation\n\n");
}
