#include <gtest/gtest.h>

#include <httplib.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <thread>

#include "claimkit/simmetrics.hpp"
#include "claimkit/textrep.hpp"
#include "oracles.hpp"

using namespace claimkit;

namespace {

const std::vector<std::string> kCorpus = {"The cat sat.", "the dog sat", "The cat ran fast"};

double idf_by_hand(double n, double df) { return std::log((1.0 + n) / (1.0 + df)) + 1.0; }

}  // namespace

TEST(Tokens, LowercaseAlnumRuns) {
  EXPECT_EQ(word_tokens("Perché l'Italia, nel 2020?"),
            (std::vector<std::string>{"perché", "l", "italia", "nel", "2020"}));
  EXPECT_EQ(word_tokens("ÀBC-déf"), (std::vector<std::string>{"àbc", "déf"}));
  EXPECT_TRUE(word_tokens(" .,; ").empty());
  EXPECT_EQ(ngram_terms({"a", "b", "c"}, 1, 2), (std::vector<std::string>{"a", "b", "c", "a b", "b c"}));
  EXPECT_TRUE(ngram_terms({"a"}, 2, 3).empty());
}

TEST(Tfidf, VocabularyAndIdfByHand) {
  const auto m = fit_tfidf(kCorpus, TfidfParams{1000, 1, 1, 1.0, 1});
  EXPECT_EQ(m.terms(), (std::vector<std::string>{"cat", "dog", "fast", "ran", "sat", "the"}));
  EXPECT_EQ(m.document_frequency(), (std::vector<std::size_t>{2, 1, 1, 1, 2, 3}));
  EXPECT_NEAR(*m.idf_of("the"), 1.0, 1e-12);
  EXPECT_NEAR(*m.idf_of("cat"), idf_by_hand(3, 2), 1e-12);
  EXPECT_NEAR(*m.idf_of("dog"), idf_by_hand(3, 1), 1e-12);
  EXPECT_FALSE(m.idf_of("bird"));
}

TEST(Tfidf, TransformIsNormalizedCountTimesIdf) {
  const auto m = fit_tfidf(kCorpus, TfidfParams{1000, 1, 1, 1.0, 1});
  const auto v = m.transform("cat cat dog bird").to_dense();
  const double c = 2 * idf_by_hand(3, 2), d = idf_by_hand(3, 1);
  const double norm = std::sqrt(c * c + d * d);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_NEAR(v[0], c / norm, 1e-12);
  EXPECT_NEAR(v[1], d / norm, 1e-12);
  for (std::size_t i = 2; i < v.size(); ++i) EXPECT_EQ(v[i], 0.0);
  EXPECT_TRUE(m.transform("nothing known").entries.empty());
}

TEST(Tfidf, DocumentFrequencyBounds) {
  // floor(0.7 * 3) = 2 drops "the" (df 3); min_df 2 keeps cat and sat.
  EXPECT_EQ(fit_tfidf(kCorpus, TfidfParams{1000, 1, 1, 0.7, 1}).terms(),
            (std::vector<std::string>{"cat", "dog", "fast", "ran", "sat"}));
  EXPECT_EQ(fit_tfidf(kCorpus, TfidfParams{1000, 1, 1, 1.0, 2}).terms(), (std::vector<std::string>{"cat", "sat", "the"}));
  EXPECT_TRUE(fit_tfidf(kCorpus, TfidfParams{1000, 1, 1, 0.7, 3}).terms().empty());
  // Ten documents: 0.7 * 10 must count as 7, not 6.
  std::vector<std::string> ten(7, "common"), rest(3, "other");
  ten.insert(ten.end(), rest.begin(), rest.end());
  EXPECT_TRUE(fit_tfidf(ten, TfidfParams{1000, 1, 1, 0.7, 1}).column("common"));
}

TEST(Tfidf, TruncationByFrequencyThenLexicographic) {
  // Frequencies: the 3, cat 2, sat 2; the tie goes to "cat".
  EXPECT_EQ(fit_tfidf(kCorpus, TfidfParams{2, 1, 1, 1.0, 1}).terms(), (std::vector<std::string>{"cat", "the"}));
}

TEST(Tfidf, Bigrams) {
  const auto m = fit_tfidf(kCorpus, TfidfParams{1000, 2, 2, 1.0, 1});
  EXPECT_EQ(m.terms(),
            (std::vector<std::string>{"cat ran", "cat sat", "dog sat", "ran fast", "the cat", "the dog"}));
  EXPECT_NEAR(*m.idf_of("the cat"), idf_by_hand(3, 2), 1e-12);
}

TEST(Tfidf, ErrorsAndGrid) {
  EXPECT_THROW(fit_tfidf(std::vector<std::string>{}, TfidfParams{}), ValidationError);
  EXPECT_THROW(fit_tfidf(kCorpus, TfidfParams{10, 2, 1, 1.0, 1}), ValidationError);
  EXPECT_THROW(fit_tfidf(kCorpus, TfidfParams{10, 1, 1, 0.0, 1}), ValidationError);
  const auto grid = tfidf_grid();
  ASSERT_EQ(grid.size(), 720u);
  std::set<std::string> ids;
  for (const auto& p : grid) ids.insert(p.id());
  EXPECT_EQ(ids.size(), 720u);
  EXPECT_EQ(grid.front(), (TfidfParams{20, 1, 1, 0.7, 1}));
  EXPECT_EQ(grid[1], (TfidfParams{20, 1, 1, 0.7, 3}));
  EXPECT_EQ(grid.back(), (TfidfParams{1000, 2, 3, 1.0, 10}));
  const auto j = to_json(TfidfParams{50, 2, 3, 0.7, 1});
  EXPECT_EQ(tfidf_params_from_json(j), (TfidfParams{50, 2, 3, 0.7, 1}));
}

TEST(Sentences, SegmentationRule) {
  EXPECT_EQ(segment_sentences("First one. Second one! third stays. Fourth?  "),
            (std::vector<std::string>{"First one.", "Second one! third stays.", "Fourth?"}));
  EXPECT_EQ(segment_sentences("Il 10.8 per cento. È poco."), (std::vector<std::string>{"Il 10.8 per cento.", "È poco."}));
  EXPECT_TRUE(segment_sentences("   ").empty());
}

TEST(Entities, HeuristicRuns) {
  HeuristicNer ner;
  EXPECT_EQ(ner.extract("Anne Rice was born in New Orleans."), (EntitySet{{"anne rice", 1}, {"new orleans", 1}}));
  EXPECT_EQ(ner.extract("The cat met Rome. Rome again, Rome."), (EntitySet{{"rome", 2}}));
  EXPECT_TRUE(ner.extract("the lowercase text").empty());
  EXPECT_EQ(ner.extract("Visits by Mario Draghi, Giorgia Meloni"),
            (EntitySet{{"mario draghi", 1}, {"giorgia meloni", 1}}));
  EXPECT_TRUE(extract_entity_set(nullptr, "").empty());
}

TEST(Entities, FileProviderAndFallback) {
  FileNerProvider p("stored");
  p.add_text("Known text", {{"x", 2}});
  EXPECT_EQ(extract_entity_set(&p, "Known text"), (EntitySet{{"x", 2}}));
  EXPECT_THROW(extract_entity_set(&p, "Other Text here"), ValidationError);
  EXPECT_EQ(extract_entity_set(&p, "Seen in Buenos Aires", true), (EntitySet{{"buenos aires", 1}}));
}

TEST(Embeddings, FileProviderLookup) {
  const auto dir = std::filesystem::temp_directory_path() / "claimkit_emb_test";
  std::filesystem::create_directories(dir);
  write_file(dir / "m.json", R"({"dimension": 2, "provider_name": "toy"})");
  write_file(dir / "t.jsonl", "{\"id\":\"a\",\"vector\":[1,0]}\n{\"text_sha256\":\"" + sha256_hex("hello") +
                                  "\",\"vector\":[0.5,0.5]}\n");
  const auto p = FileEmbeddingProvider::load(dir / "t.jsonl", dir / "m.json");
  EXPECT_EQ(p.name(), "toy");
  EXPECT_EQ(get_embedding(p, "hello"), (DenseVector{0.5, 0.5}));
  EXPECT_EQ(p.embed_id("a"), (DenseVector{1, 0}));
  EXPECT_THROW(p.embed("unknown"), MissingEmbeddingError);
  EXPECT_THROW(p.embed_id("zz"), MissingEmbeddingError);
  write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"vector\":[1,0,3]}\n");
  EXPECT_THROW(FileEmbeddingProvider::load(dir / "bad.jsonl", dir / "m.json"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST(Embeddings, HttpProviderMemoizes) {
  httplib::Server server;
  std::atomic<int> calls{0};
  server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const auto body = nlohmann::json::parse(req.body);
    const auto text = body.at("texts").at(0).get<std::string>();
    res.set_content(nlohmann::json{{"embeddings", {{double(text.size()), 1.0}}}}.dump(), "application/json");
  });
  server.Post("/entities", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"([["Roma", "Roma", "Lazio"]])", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  HttpEmbeddingProvider emb(base, "svc", 2);
  EXPECT_EQ(get_embedding(emb, "abc"), (DenseVector{3, 1}));
  EXPECT_EQ(get_embedding(emb, "abc"), (DenseVector{3, 1}));
  EXPECT_EQ(calls.load(), 1);
  HttpEmbeddingProvider wrong_dim(base, "svc", 3);
  EXPECT_THROW(wrong_dim.embed("x"), ValidationError);

  HttpNerProvider ner(base, "svc");
  EXPECT_EQ(ner.extract("whatever"), (EntitySet{{"roma", 2}, {"lazio", 1}}));

  server.stop();
  t.join();
  HttpEmbeddingProvider down(base, "svc", 2, std::chrono::milliseconds(500));
  EXPECT_THROW(down.embed("y"), TransportError);
}

TEST(Similarity, VectorExamples) {
  const DenseVector a{1, 0}, b{0, 1}, c{2, 0};
  EXPECT_NEAR(cosine(a, b).value, 0.0, 1e-15);
  EXPECT_NEAR(cosine(a, c).value, 1.0, 1e-15);
  EXPECT_NEAR(neg_euclidean(a, b).value, -std::sqrt(2.0), 1e-15);
  EXPECT_EQ(cosine(DenseVector{0, 0}, a).value, 0.0);
  EXPECT_THROW(cosine(a, DenseVector{1, 2, 3}), ValidationError);
  EXPECT_THROW(vector_similarity(Metric::Jaccard, a, b), ValidationError);

  SparseVector s{4, {{0, 1.0}, {3, 2.0}}}, t{4, {{1, 1.0}, {3, 1.0}}};
  EXPECT_NEAR(cosine(s, t).value, cosine(s.to_dense(), t.to_dense()).value, 1e-15);
  EXPECT_NEAR(neg_euclidean(s, t).value, neg_euclidean(s.to_dense(), t.to_dense()).value, 1e-15);
}

TEST(Similarity, SetExamples) {
  const EntitySet a{{"a", 1}, {"b", 2}, {"c", 1}}, b{{"b", 1}, {"c", 3}, {"d", 1}};
  EXPECT_DOUBLE_EQ(set_similarity(Metric::Jaccard, a, b).value, 0.5);
  EXPECT_DOUBLE_EQ(set_similarity(Metric::Dice, a, b).value, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(set_similarity(Metric::Overlap, a, b).value, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(set_similarity(Metric::CosineSet, a, b).value, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(set_similarity(Metric::WeightedIntersection, a, b).value, 0.5);
  EXPECT_DOUBLE_EQ(set_similarity(Metric::UnionSize, a, b).value, 4.0 / 6.0);
  for (Metric m : {Metric::Jaccard, Metric::Dice, Metric::Overlap, Metric::CosineSet, Metric::WeightedIntersection,
                   Metric::UnionSize}) {
    EXPECT_EQ(set_similarity(m, {}, {}).value, 0.0) << to_string(m);
    EXPECT_EQ(parse_metric(to_string(m)), m);
  }
  EXPECT_THROW(set_similarity(Metric::Cosine, a, b), ValidationError);
  EXPECT_THROW(parse_metric("manhattan"), ValidationError);

  std::set<std::string> sa, sb;
  for (const auto& [k, v] : a) sa.insert(k);
  for (const auto& [k, v] : b) sb.insert(k);
  EXPECT_DOUBLE_EQ(set_similarity(Metric::Jaccard, a, b).value, oracle::set_jaccard(sa, sb));
}

TEST(Similarity, MaxOverSentences) {
  const DenseVector stmt{1, 0};
  const std::vector<DenseVector> sents{{0, 1}, {1, 1}, {-1, 0}};
  EXPECT_NEAR(max_sentence_similarity(stmt, sents, Metric::Cosine).value, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(max_sentence_similarity(stmt, sents, Metric::NegEuclidean).value, -1.0, 1e-15);
  EXPECT_EQ(max_sentence_similarity(stmt, std::vector<DenseVector>{}, Metric::Cosine).value, -1.0);
  EXPECT_EQ(max_sentence_similarity(stmt, std::vector<DenseVector>{}, Metric::NegEuclidean).value,
            kDefaultNegEuclideanFloor);
  EXPECT_EQ(max_sentence_similarity(stmt, std::vector<DenseVector>{}, Metric::NegEuclidean, -50.0).value, -50.0);
}

TEST(Similarity, RandomizedProperties) {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    DenseVector u(5), v(5);
    for (auto& x : u) x = rng.uniform(-3, 3);
    for (auto& x : v) x = rng.uniform(-3, 3);
    const double c = cosine(u, v).value;
    EXPECT_NEAR(c, cosine(v, u).value, 1e-15);
    EXPECT_LE(std::abs(c), 1.0);
    DenseVector scaled = u;
    for (auto& x : scaled) x *= 7.5;
    EXPECT_NEAR(cosine(scaled, v).value, c, 1e-12);
    EXPECT_LE(neg_euclidean(u, v).value, 0.0);
    EXPECT_EQ(neg_euclidean(u, u).value, 0.0);
  }
}
