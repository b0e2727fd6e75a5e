#include <gtest/gtest.h>

#include <cmath>

#include "claimkit/ensemble.hpp"
#include "claimkit/features.hpp"
#include "claimkit/gridsearch.hpp"
#include "oracles.hpp"

using namespace claimkit;

namespace {

LabeledPair pair(std::string id, std::string claim, std::string text, SimLabel label) {
  LabeledPair p;
  p.id = std::move(id);
  p.claim = std::move(claim);
  p.text = std::move(text);
  p.label = label;
  return p;
}

std::vector<LabeledPair> toy_pairs() {
  return {pair("1", "Taxes rose in Rome", "In Rome taxes rose sharply last year", SimLabel::Mention),
          pair("2", "Taxes rose in Rome", "The football match ended in a draw", SimLabel::OffTopic),
          pair("3", "Pensions fell in Milan", "Milan pensions fell again. Officials confirmed it.", SimLabel::Mention),
          pair("4", "Pensions fell in Milan", "A new museum opened downtown", SimLabel::OffTopic)};
}

FeatureSpec tfidf_spec(TfidfParams p, Metric m) { return {Technique::Tfidf, p, {}, m}; }

FeatureConfig two_spec_config() {
  FeatureConfig c;
  c.specs = {tfidf_spec({1000, 1, 1, 1.0, 1}, Metric::Cosine), tfidf_spec({1000, 1, 2, 1.0, 1}, Metric::NegEuclidean)};
  return c;
}

struct Dataset {
  Rows x;
  std::vector<int> y;
};

// Uniform points kept at distance >= 1 from the line x0 + x1 = 0.
Dataset separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  while (d.x.size() < n) {
    const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
    const double s = (a + b) / std::sqrt(2.0);
    if (std::abs(s) < 1.0) continue;
    d.x.push_back({a, b});
    d.y.push_back(s > 0 ? 1 : 0);
  }
  return d;
}

}  // namespace

TEST(Features, SelfSimilarityIsOne) {
  FeatureConfig c;
  c.specs = {tfidf_spec({1000, 1, 1, 1.0, 1}, Metric::Cosine)};
  FeatureProviders providers;
  fit_tfidf_models(c, {"alpha beta gamma", "delta"}, providers);
  const auto v = featurize_pair("alpha beta", "alpha beta", "x", c, providers);
  ASSERT_EQ(v.values.size(), 1u);
  EXPECT_NEAR(v.values[0], 1.0, 1e-12);
  EXPECT_EQ(v.config_hash, config_hash(c));
}

TEST(Features, SetRowsMatchPairs) {
  const auto pairs = toy_pairs();
  auto c = two_spec_config();
  c.specs.push_back({Technique::Entities, std::nullopt, "heuristic", Metric::Jaccard});
  FeatureProviders providers;
  fit_tfidf_models(c, fitting_corpus(pairs), providers);
  const auto m = featurize_set(pairs, c, providers, 3);
  ASSERT_EQ(m.size(), 4u);
  ASSERT_EQ(m.width(), 3u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto v = featurize_pair(pairs[i].claim, pairs[i].text, pairs[i].id, c, providers);
    EXPECT_EQ(m.rows[i], v.values);
    EXPECT_EQ(m.pair_ids[i], pairs[i].id);
  }
  EXPECT_EQ(m.labels, (std::vector<int>{1, 0, 1, 0}));

  auto swapped = pairs;
  std::swap(swapped[0], swapped[3]);
  const auto ms = featurize_set(swapped, c, providers);
  EXPECT_EQ(ms.rows[0], m.rows[3]);
  EXPECT_EQ(ms.rows[3], m.rows[0]);
  EXPECT_EQ(featurize_set({}, c, providers).size(), 0u);
}

TEST(Features, EmbeddingAndSentenceSpecs) {
  auto emb = std::make_shared<FileEmbeddingProvider>("toy", 2);
  emb->add_text("claim", {1, 0});
  emb->add_text("First part. Second part.", {1, 1});
  emb->add_text("First part.", {0, 1});
  emb->add_text("Second part.", {1, 0.1});
  FeatureProviders providers;
  providers.embedders["toy"] = emb;
  FeatureConfig c;
  c.specs = {{Technique::Embedding, std::nullopt, "toy", Metric::Cosine},
             {Technique::SentenceEmbedding, std::nullopt, "toy", Metric::Cosine}};
  const auto v = featurize_pair("claim", "First part. Second part.", "p", c, providers);
  EXPECT_NEAR(v.values[0], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(v.values[1], 1.0 / std::sqrt(1.01), 1e-12);
  EXPECT_THROW(featurize_pair("missing", "First part.", "p", c, providers), MissingEmbeddingError);

  FeatureConfig bad;
  bad.specs = {{Technique::Embedding, std::nullopt, "absent", Metric::Cosine}};
  EXPECT_THROW(featurize_pair("claim", "claim", "p", bad, providers), ValidationError);
}

TEST(Features, ConfigValidationAndHash) {
  auto c = two_spec_config();
  const auto h = config_hash(c);
  EXPECT_EQ(h, config_hash(feature_config_from_json(to_json(c))));
  auto changed = c;
  changed.specs[1].metric = Metric::Cosine;
  EXPECT_NE(config_hash(changed), h);
  changed = c;
  changed.specs[0].tfidf->min_df = 3;
  EXPECT_NE(config_hash(changed), h);

  FeatureConfig empty;
  EXPECT_THROW(empty.validate(), ValidationError);
  auto dup = c;
  dup.specs.push_back(dup.specs[0]);
  EXPECT_THROW(dup.validate(), ValidationError);
  FeatureSpec wrong{Technique::Entities, std::nullopt, "heuristic", Metric::Cosine};
  EXPECT_THROW(wrong.validate(), ValidationError);
  FeatureSpec wrong2{Technique::Tfidf, TfidfParams{}, {}, Metric::Dice};
  EXPECT_THROW(wrong2.validate(), ValidationError);
}

TEST(Features, UnfittedModelIsAnError) {
  FeatureProviders providers;
  EXPECT_THROW(featurize_pair("a", "b", "p", two_spec_config(), providers), ValidationError);
}

TEST(Features, CsvRoundTrip) {
  const auto pairs = toy_pairs();
  const auto c = two_spec_config();
  FeatureProviders providers;
  fit_tfidf_models(c, fitting_corpus(pairs), providers);
  const auto m = featurize_set(pairs, c, providers);
  const auto back = feature_matrix_from_csv(feature_matrix_to_csv(m), c);
  EXPECT_EQ(back.rows, m.rows);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(back.pair_ids, m.pair_ids);
  EXPECT_EQ(back.config_hash, m.config_hash);
  auto other = c;
  other.specs.pop_back();
  EXPECT_THROW(feature_matrix_from_csv(feature_matrix_to_csv(m), other), ValidationError);
}

TEST(Features, FittingCorpusIsDistinctInOrder) {
  EXPECT_EQ(fitting_corpus(toy_pairs()).size(), 6u);
  EXPECT_EQ(fitting_corpus(toy_pairs()).front(), "Taxes rose in Rome");
}

TEST(GridSearch, RanksAllSettings) {
  const auto pairs = toy_pairs();
  const auto ranked = grid_search(pairs);
  ASSERT_EQ(ranked.size(), 720u);
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    EXPECT_GE(ranked[i - 1].best().f1, ranked[i].best().f1);
    if (ranked[i - 1].best().f1 == ranked[i].best().f1) EXPECT_LT(ranked[i - 1].grid_index, ranked[i].grid_index);
  }
  const auto csv_text = grid_results_csv(ranked);
  EXPECT_EQ(csv::parse(csv_text).size(), 721u);

  DefaultConfigOptions opt;
  opt.top_m = 3;
  opt.ners = {"heuristic"};
  const auto c = default_feature_config(ranked, opt);
  EXPECT_EQ(c.specs.size(), 3u * 2 + 6);
  EXPECT_EQ(*c.specs[0].tfidf, ranked[0].params);
}

TEST(Ensemble, KnnMemorizesTrainingPoints) {
  const auto d = separable(40, 1);
  ClassifierSpec spec{ClassifierKind::Knn};
  spec.k = 1;
  const auto m = train_classifier(spec, d.x, d.y);
  EXPECT_EQ(predict_rows(m, d.x), d.y);
}

TEST(Ensemble, KnnVoteTieGoesToZero) {
  ClassifierSpec spec{ClassifierKind::Knn};
  spec.k = 2;
  const auto m = train_classifier(spec, {{0.0}, {2.0}}, std::vector<int>{1, 0});
  EXPECT_EQ(predict_rows(m, {{1.0}}), (std::vector<int>{0}));
}

TEST(Ensemble, SingleTreeForestEqualsDecisionTree) {
  const auto d = separable(120, 2);
  ClassifierSpec tree{ClassifierKind::DecisionTree};
  ClassifierSpec forest{ClassifierKind::RandomForest};
  forest.n_trees = 1;
  forest.bootstrap = false;
  forest.max_features = 2;
  forest.seed = 5;
  const auto mt = train_classifier(tree, d.x, d.y);
  const auto mf = train_classifier(forest, d.x, d.y);
  const auto& t = std::get<TreeParams>(mt.params);
  const auto& f = std::get<ForestParams>(mf.params).trees.at(0);
  ASSERT_EQ(t.nodes.size(), f.nodes.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    EXPECT_EQ(t.nodes[i].feature, f.nodes[i].feature);
    EXPECT_EQ(t.nodes[i].threshold, f.nodes[i].threshold);
    EXPECT_EQ(t.nodes[i].label, f.nodes[i].label);
  }
  const auto probe = separable(200, 3);
  EXPECT_EQ(predict_rows(mt, probe.x), predict_rows(mf, probe.x));
}

TEST(Ensemble, GaussianNbHandExample) {
  ClassifierSpec spec{ClassifierKind::GaussianNb};
  const auto m = train_classifier(spec, {{-1.0}, {-1.1}, {1.0}, {1.1}}, std::vector<int>{0, 0, 1, 1});
  EXPECT_EQ(predict_rows(m, {{0.9}}), (std::vector<int>{1}));
  EXPECT_EQ(predict_rows(m, {{-0.9}}), (std::vector<int>{0}));
  const auto& p = std::get<GaussianNbParams>(m.params);
  EXPECT_NEAR(p.mean[0][0], -1.05, 1e-12);
  EXPECT_NEAR(p.var[1][0], 0.0025, 1e-12);
}

TEST(Ensemble, EveryKindLearnsSeparableData) {
  const auto d = separable(200, 11);
  Rows train_x(d.x.begin(), d.x.begin() + 100), test_x(d.x.begin() + 100, d.x.end());
  std::vector<int> train_y(d.y.begin(), d.y.begin() + 100), test_y(d.y.begin() + 100, d.y.end());
  for (auto kind : {ClassifierKind::Knn, ClassifierKind::DecisionTree, ClassifierKind::RandomForest,
                    ClassifierKind::GaussianNb, ClassifierKind::LinearMaxMargin}) {
    ClassifierSpec spec{kind};
    spec.n_trees = 25;
    spec.seed = 3;
    const auto m = train_classifier(spec, train_x, train_y, "h", 2);
    const auto pred = predict_rows(m, test_x);
    for (int v : pred) EXPECT_TRUE(v == 0 || v == 1);
    EXPECT_GE(accuracy(test_y, pred), 0.95) << to_string(kind);
    EXPECT_EQ(predict_rows(m, test_x), pred);
    EXPECT_TRUE(predict_rows(m, {}).empty());
  }
}

TEST(Ensemble, DeterministicGivenSeed) {
  const auto d = separable(80, 4);
  for (auto kind : {ClassifierKind::RandomForest, ClassifierKind::LinearMaxMargin}) {
    ClassifierSpec spec{kind};
    spec.n_trees = 10;
    spec.seed = 77;
    const auto a = to_json(train_classifier(spec, d.x, d.y, "h", 1));
    const auto b = to_json(train_classifier(spec, d.x, d.y, "h", 4));
    EXPECT_EQ(a.dump(), b.dump()) << to_string(kind);
  }
}

TEST(Ensemble, TrainingErrors) {
  ClassifierSpec spec;
  EXPECT_THROW(train_classifier(spec, {{1.0}, {2.0}}, std::vector<int>{1, 1}), ValidationError);
  EXPECT_THROW(train_classifier(spec, {{1.0}}, std::vector<int>{1}), ValidationError);
  EXPECT_THROW(train_classifier(spec, {{1.0}, {2.0}}, std::vector<int>{0}), ValidationError);
  EXPECT_THROW(train_classifier(spec, {{1.0}, {NAN}}, std::vector<int>{0, 1}), ValidationError);
  spec.max_depth = 0;
  EXPECT_THROW(train_classifier(spec, {{1.0}, {2.0}}, std::vector<int>{0, 1}), ValidationError);
}

TEST(Ensemble, PredictChecksHashAndWidth) {
  FeatureMatrix m;
  m.spec_ids = {"a", "b"};
  m.config_hash = "h1";
  m.labels = {0, 1, 0, 1};
  m.rows = {{0, 0}, {1, 1}, {0, 0.1}, {1, 0.9}};
  m.pair_ids = {"1", "2", "3", "4"};
  const auto model = train_classifier(ClassifierSpec{ClassifierKind::DecisionTree}, m);
  EXPECT_EQ(predict(model, m), m.labels);
  auto other = m;
  other.config_hash = "h2";
  EXPECT_THROW(predict(model, other), ValidationError);
  EXPECT_THROW(predict_rows(model, {{1.0}}), ValidationError);
}

TEST(Ensemble, ModelJsonRoundTrip) {
  const auto d = separable(60, 9);
  for (auto kind : {ClassifierKind::Knn, ClassifierKind::DecisionTree, ClassifierKind::RandomForest,
                    ClassifierKind::GaussianNb, ClassifierKind::LinearMaxMargin}) {
    ClassifierSpec spec{kind};
    spec.n_trees = 5;
    const auto m = train_classifier(spec, d.x, d.y, "hash");
    const auto j = to_json(m);
    EXPECT_EQ(j.at("format"), "claimkit-model");
    const auto back = trained_model_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.config_hash, "hash");
    EXPECT_EQ(predict_rows(back, d.x), predict_rows(m, d.x)) << to_string(kind);
    EXPECT_EQ(to_json(back).dump(), j.dump());
  }
}

TEST(Threshold, HandExample) {
  const auto r = threshold_baseline(std::vector<double>{0.9, 0.8, 0.2}, std::vector<int>{1, 1, 0});
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  EXPECT_DOUBLE_EQ(r.threshold, 0.5);
  EXPECT_THROW(threshold_baseline(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ValidationError);
}

TEST(Threshold, MatchesBruteForce) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(8)) / 4.0;  // many ties
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    const auto r = threshold_baseline(s, y);
    EXPECT_NEAR(r.f1, oracle::best_cut_f1(s, y), 1e-12);
    std::vector<int> pred;
    for (double v : s) pred.push_back(v >= r.threshold ? 1 : 0);
    EXPECT_NEAR(prf1(y, pred, 1).f1, r.f1, 1e-12);
  }
}

TEST(Importance, PredictiveFeatureDominatesConstantIsZero) {
  Rng rng(8);
  FeatureMatrix m;
  m.spec_ids = {"signal", "noise", "constant"};
  m.config_hash = "h";
  for (int i = 0; i < 120; ++i) {
    const int y = i % 2;
    m.labels.push_back(y);
    m.rows.push_back({y + rng.uniform(-0.2, 0.2), rng.uniform(0, 1), 0.5});
    m.pair_ids.push_back(std::to_string(i));
  }
  ClassifierSpec spec{ClassifierKind::DecisionTree};
  spec.max_depth = 3;
  const auto model = train_classifier(spec, m);
  const auto imp = permutation_importance(model, m, 21);
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[2], 0.0);
  EXPECT_GT(imp[0], imp[1]);
  EXPECT_GT(imp[0], imp[2]);
  EXPECT_EQ(permutation_importance(model, m, 21), imp);
}
