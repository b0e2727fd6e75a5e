#pragma once

// Exhaustive TFIDF parameter search scored by the threshold baseline, and the
// default feature config built from its ranking.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "claimkit/corpus.hpp"
#include "claimkit/csv.hpp"
#include "claimkit/ensemble.hpp"
#include "claimkit/features.hpp"
#include "claimkit/simmetrics.hpp"
#include "claimkit/textrep.hpp"
#include "claimkit/util.hpp"

namespace claimkit {

struct GridResult {
  std::size_t grid_index = 0;  // position in tfidf_grid()
  TfidfParams params;
  ThresholdResult cosine;
  ThresholdResult neg_euclidean;

  Metric best_metric() const { return neg_euclidean.f1 > cosine.f1 ? Metric::NegEuclidean : Metric::Cosine; }
  const ThresholdResult& best() const { return neg_euclidean.f1 > cosine.f1 ? neg_euclidean : cosine; }
};

inline std::vector<int> binary_labels(const std::vector<LabeledPair>& pairs) {
  std::vector<int> y;
  y.reserve(pairs.size());
  for (const auto& p : pairs) {
    const int c = label_code(p.label);
    if (c != 0 && c != 1) throw ValidationError("pair '" + p.id + "' has a non-binary label");
    y.push_back(c);
  }
  return y;
}

// Scores every setting by the best single-threshold F1 of its cosine and
// negated-distance statement/document similarities. Models are fitted on
// the distinct texts of `pairs`. Results are ranked by F1 (descending),
// grid order breaking ties.
inline std::vector<GridResult> grid_search(const std::vector<LabeledPair>& pairs,
                                           const std::vector<TfidfParams>& grid = tfidf_grid(), unsigned jobs = 1) {
  const auto y = binary_labels(pairs);
  const auto corpus = fitting_corpus(pairs);
  std::map<std::pair<int, int>, TermStatistics> stats;
  for (const auto& p : grid) {
    p.validate();
    const std::pair<int, int> range{p.ngram_lo, p.ngram_hi};
    if (!stats.count(range)) stats.emplace(range, collect_term_statistics(corpus, p.ngram_lo, p.ngram_hi));
  }

  std::vector<GridResult> results(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t g) {
    const auto& params = grid[g];
    const auto model = fit_tfidf(stats.at({params.ngram_lo, params.ngram_hi}), params);
    std::vector<double> cos(pairs.size()), neg(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto s = model.transform(pairs[i].claim), d = model.transform(pairs[i].text);
      cos[i] = cosine(s, d).value;
      neg[i] = neg_euclidean(s, d).value;
    }
    results[g] = {g, params, threshold_baseline(cos, y), threshold_baseline(neg, y)};
  });
  std::stable_sort(results.begin(), results.end(),
                   [](const GridResult& a, const GridResult& b) { return a.best().f1 > b.best().f1; });
  return results;
}

inline std::string grid_results_csv(const std::vector<GridResult>& ranked) {
  std::string out;
  csv::append_row(out, {"rank", "n_features", "ngram_lo", "ngram_hi", "max_df", "min_df", "best_metric", "threshold",
                        "f1", "f1_cosine", "f1_neg_euclidean"});
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& g = ranked[r];
    csv::append_row(out, {std::to_string(r + 1), std::to_string(g.params.n_features), std::to_string(g.params.ngram_lo),
                          std::to_string(g.params.ngram_hi), format_double(g.params.max_df),
                          std::to_string(g.params.min_df), to_string(g.best_metric()), format_double(g.best().threshold),
                          format_double(g.best().f1), format_double(g.cosine.f1), format_double(g.neg_euclidean.f1)});
  }
  return out;
}

struct DefaultConfigOptions {
  std::size_t top_m = 16;
  std::vector<std::string> embedders;             // emb + sent
  std::vector<std::string> translated_embedders;  // emb_tr + sent_tr
  std::vector<std::string> ners;                  // ner ("heuristic" allowed)
  std::vector<std::string> translated_ners;       // ner_tr
  double neg_euclidean_floor = kDefaultNegEuclideanFloor;
  bool ner_fallback = false;
};

// Top-m TFIDF settings with both vector metrics, then every listed provider.
// Providers not listed are left out entirely.
inline FeatureConfig default_feature_config(const std::vector<GridResult>& ranked, const DefaultConfigOptions& opt) {
  FeatureConfig c;
  c.neg_euclidean_floor = opt.neg_euclidean_floor;
  c.ner_fallback = opt.ner_fallback;
  const std::size_t m = std::min(opt.top_m, ranked.size());
  for (std::size_t i = 0; i < m; ++i)
    for (Metric metric : {Metric::Cosine, Metric::NegEuclidean})
      c.specs.push_back({Technique::Tfidf, ranked[i].params, {}, metric});
  auto add_vectors = [&](const std::vector<std::string>& names, Technique whole, Technique sentences) {
    for (const auto& name : names)
      for (Technique t : {whole, sentences})
        for (Metric metric : {Metric::Cosine, Metric::NegEuclidean}) c.specs.push_back({t, std::nullopt, name, metric});
  };
  add_vectors(opt.embedders, Technique::Embedding, Technique::SentenceEmbedding);
  add_vectors(opt.translated_embedders, Technique::EmbeddingTranslated, Technique::SentenceEmbeddingTranslated);
  auto add_sets = [&](const std::vector<std::string>& names, Technique t) {
    for (const auto& name : names)
      for (Metric metric : {Metric::Jaccard, Metric::Dice, Metric::Overlap, Metric::CosineSet,
                            Metric::WeightedIntersection, Metric::UnionSize})
        c.specs.push_back({t, std::nullopt, name, metric});
  };
  add_sets(opt.ners, Technique::Entities);
  add_sets(opt.translated_ners, Technique::EntitiesTranslated);
  c.validate();
  return c;
}

}  // namespace claimkit
