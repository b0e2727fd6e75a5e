#pragma once

// Text representations: TFIDF vectors, sentence segmentation, and the
// embedding / named-entity provider interfaces.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimkit/error.hpp"
#include "claimkit/http.hpp"
#include "claimkit/util.hpp"

namespace claimkit {

// ---------------------------------------------------------------------------
// Vectors

using DenseVector = std::vector<double>;

// Sorted by index, no stored zeros.
struct SparseVector {
  std::size_t dimension = 0;
  std::vector<std::pair<std::size_t, double>> entries;

  double norm() const {
    double s = 0.0;
    for (const auto& [i, v] : entries) s += v * v;
    return std::sqrt(s);
  }

  DenseVector to_dense() const {
    DenseVector out(dimension, 0.0);
    for (const auto& [i, v] : entries) out[i] = v;
    return out;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

// ---------------------------------------------------------------------------
// TFIDF

struct TfidfParams {
  int n_features = 1000;
  int ngram_lo = 1;
  int ngram_hi = 1;
  double max_df = 1.0;  // proportion of documents
  int min_df = 1;       // absolute document count

  friend bool operator==(const TfidfParams&, const TfidfParams&) = default;

  void validate() const {
    if (n_features < 1) throw ValidationError("n_features must be positive");
    if (ngram_lo < 1 || ngram_lo > ngram_hi) throw ValidationError("ngram_range must satisfy 1 <= lo <= hi");
    if (!(max_df > 0.0 && max_df <= 1.0)) throw ValidationError("max_df must lie in (0, 1]");
    if (min_df < 1) throw ValidationError("min_df must be at least 1");
  }

  std::string id() const {
    return "tfidf[n=" + std::to_string(n_features) + ",ng=" + std::to_string(ngram_lo) + "-" +
           std::to_string(ngram_hi) + ",maxdf=" + format_double(max_df) + ",mindf=" + std::to_string(min_df) + "]";
  }
};

inline nlohmann::json to_json(const TfidfParams& p) {
  return {{"n_features", p.n_features},
          {"ngram_range", {p.ngram_lo, p.ngram_hi}},
          {"max_df", p.max_df},
          {"min_df", p.min_df}};
}

inline TfidfParams tfidf_params_from_json(const nlohmann::json& j) {
  TfidfParams p;
  p.n_features = j.at("n_features").get<int>();
  p.ngram_lo = j.at("ngram_range").at(0).get<int>();
  p.ngram_hi = j.at("ngram_range").at(1).get<int>();
  p.max_df = j.at("max_df").get<double>();
  p.min_df = j.at("min_df").get<int>();
  p.validate();
  return p;
}

// The full search grid, n_features outermost and min_df innermost.
inline std::vector<TfidfParams> tfidf_grid() {
  static constexpr int kFeatures[] = {20, 50, 100, 200, 500, 1000};
  static constexpr std::pair<int, int> kNgrams[] = {{1, 1}, {2, 2}, {3, 3}, {1, 3}, {1, 2}, {2, 3}};
  static constexpr double kMaxDf[] = {0.7, 0.8, 0.9, 1.0};
  static constexpr int kMinDf[] = {1, 3, 5, 7, 10};
  std::vector<TfidfParams> grid;
  grid.reserve(720);
  for (int nf : kFeatures)
    for (auto [lo, hi] : kNgrams)
      for (double mx : kMaxDf)
        for (int mn : kMinDf) grid.push_back({nf, lo, hi, mx, mn});
  return grid;
}

// Lowercased runs of letters/digits.
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = next_code_point(text, i);
    if (is_alnum_cp(cp)) {
      append_utf8(current, to_lower_cp(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// Word n-grams for every n in [lo, hi], space-joined.
inline std::vector<std::string> ngram_terms(const std::vector<std::string>& tokens, int lo, int hi) {
  std::vector<std::string> terms;
  for (int n = lo; n <= hi; ++n) {
    if (tokens.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string t = tokens[i];
      for (int k = 1; k < n; ++k) {
        t.push_back(' ');
        t += tokens[i + k];
      }
      terms.push_back(std::move(t));
    }
  }
  return terms;
}

// Document frequency and total frequency of every n-gram in a corpus, for
// one n-gram range. Computing this once lets a grid search derive many
// models cheaply.
struct TermStatistics {
  int ngram_lo = 1;
  int ngram_hi = 1;
  std::size_t corpus_size = 0;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> df_and_freq;
};

inline TermStatistics collect_term_statistics(const std::vector<std::string>& corpus, int ngram_lo, int ngram_hi) {
  if (corpus.empty()) throw ValidationError("cannot fit TFIDF on an empty corpus");
  if (ngram_lo < 1 || ngram_lo > ngram_hi) throw ValidationError("ngram_range must satisfy 1 <= lo <= hi");
  TermStatistics stats;
  stats.ngram_lo = ngram_lo;
  stats.ngram_hi = ngram_hi;
  stats.corpus_size = corpus.size();
  for (const auto& doc : corpus) {
    auto terms = ngram_terms(word_tokens(doc), ngram_lo, ngram_hi);
    std::sort(terms.begin(), terms.end());
    for (std::size_t i = 0; i < terms.size();) {
      std::size_t j = i;
      while (j < terms.size() && terms[j] == terms[i]) ++j;
      auto& entry = stats.df_and_freq[terms[i]];
      entry.first += 1;
      entry.second += j - i;
      i = j;
    }
  }
  return stats;
}

class TfidfModel {
 public:
  TfidfModel() = default;

  const TfidfParams& params() const { return params_; }
  std::size_t corpus_size() const { return corpus_size_; }
  std::size_t dimension() const { return terms_.size(); }
  // Column order (lexicographic).
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<std::size_t>& document_frequency() const { return df_; }

  std::optional<std::size_t> column(const std::string& term) const {
    auto it = vocabulary_.find(term);
    if (it == vocabulary_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> idf_of(const std::string& term) const {
    auto c = column(term);
    if (!c) return std::nullopt;
    return idf_[*c];
  }

  // Raw counts times idf over in-vocabulary terms, L2-normalized when
  // nonzero.
  SparseVector transform(std::string_view text) const {
    SparseVector out;
    out.dimension = terms_.size();
    std::map<std::size_t, double> counts;
    for (const auto& term : ngram_terms(word_tokens(text), params_.ngram_lo, params_.ngram_hi)) {
      auto it = vocabulary_.find(term);
      if (it != vocabulary_.end()) counts[it->second] += 1.0;
    }
    double sq = 0.0;
    for (auto& [col, v] : counts) {
      v *= idf_[col];
      sq += v * v;
    }
    if (sq == 0.0) return out;
    const double norm = std::sqrt(sq);
    out.entries.reserve(counts.size());
    for (const auto& [col, v] : counts) out.entries.emplace_back(col, v / norm);
    return out;
  }

  friend TfidfModel fit_tfidf(const TermStatistics& stats, const TfidfParams& params);

 private:
  TfidfParams params_;
  std::size_t corpus_size_ = 0;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> vocabulary_;
};

inline TfidfModel fit_tfidf(const TermStatistics& stats, const TfidfParams& params) {
  params.validate();
  if (stats.ngram_lo != params.ngram_lo || stats.ngram_hi != params.ngram_hi)
    throw ValidationError("term statistics were collected for a different ngram_range");
  const auto n = static_cast<double>(stats.corpus_size);
  // df <= floor(max_df * N); the epsilon absorbs products like 0.7 * 10.
  const auto max_count = static_cast<std::size_t>(std::floor(params.max_df * n + 1e-9));

  struct Candidate {
    const std::string* term;
    std::size_t df;
    std::size_t freq;
  };
  std::vector<Candidate> kept;
  for (const auto& [term, dq] : stats.df_and_freq)
    if (dq.first >= static_cast<std::size_t>(params.min_df) && dq.first <= max_count)
      kept.push_back({&term, dq.first, dq.second});

  if (kept.size() > static_cast<std::size_t>(params.n_features)) {
    std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
      if (a.freq != b.freq) return a.freq > b.freq;
      return *a.term < *b.term;
    });
    kept.resize(params.n_features);
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) { return *a.term < *b.term; });

  TfidfModel model;
  model.params_ = params;
  model.corpus_size_ = stats.corpus_size;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    model.terms_.push_back(*kept[i].term);
    model.df_.push_back(kept[i].df);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(kept[i].df))) + 1.0);
    model.vocabulary_.emplace(*kept[i].term, i);
  }
  return model;
}

inline TfidfModel fit_tfidf(const std::vector<std::string>& corpus, const TfidfParams& params) {
  params.validate();
  return fit_tfidf(collect_term_statistics(corpus, params.ngram_lo, params.ngram_hi), params);
}

inline SparseVector transform_tfidf(const TfidfModel& model, std::string_view text) { return model.transform(text); }

// ---------------------------------------------------------------------------
// Sentences

// Splits after '.', '!' or '?' when followed by whitespace and an uppercase
// letter. Segments are trimmed; empty ones are dropped.
inline std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto push = [&](std::string_view seg) {
    seg = trim(seg);
    if (!seg.empty()) out.emplace_back(seg);
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (!is_space(text[i + 1])) continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j >= text.size()) break;
    std::size_t k = j;
    if (!is_upper_cp(next_code_point(text, k))) continue;
    push(text.substr(start, i + 1 - start));
    start = j;
    i = j - 1;
  }
  if (start < text.size()) push(text.substr(start));
  return out;
}

// ---------------------------------------------------------------------------
// Embedding providers

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t dimension() const = 0;
  // Must return identical vectors for identical text.
  virtual DenseVector embed(std::string_view text) const = 0;
};

inline DenseVector get_embedding(const EmbeddingProvider& provider, std::string_view text) {
  DenseVector v = provider.embed(text);
  if (v.size() != provider.dimension())
    throw ValidationError("embedding from '" + provider.name() + "' has dimension " + std::to_string(v.size()) +
                          ", manifest says " + std::to_string(provider.dimension()));
  return v;
}

// Lookup table of precomputed vectors. Records are keyed either by "id" or by
// "text_sha256" (hex SHA-256 of the UTF-8 text); `embed` looks texts up by
// their hash.
class FileEmbeddingProvider : public EmbeddingProvider {
 public:
  static FileEmbeddingProvider load(const std::filesystem::path& table, const std::filesystem::path& manifest) {
    const auto m = nlohmann::json::parse(read_file(manifest));
    FileEmbeddingProvider p;
    p.name_ = m.at("provider_name").get<std::string>();
    p.dimension_ = m.at("dimension").get<std::size_t>();
    const std::string content = read_file(table);
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
      std::size_t end = content.find('\n', pos);
      if (end == std::string::npos) end = content.size();
      const std::string_view line(content.data() + pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (trim(line).empty()) continue;
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(table.string() + ":" + std::to_string(line_no) + ": malformed JSON");
      }
      DenseVector v = rec.at("vector").get<DenseVector>();
      if (v.size() != p.dimension_)
        throw ValidationError(table.string() + ":" + std::to_string(line_no) + ": dimension mismatch vs manifest");
      if (rec.contains("id")) p.by_id_[rec["id"].get<std::string>()] = v;
      if (rec.contains("text_sha256")) p.by_hash_[rec["text_sha256"].get<std::string>()] = v;
    }
    return p;
  }

  FileEmbeddingProvider() = default;
  FileEmbeddingProvider(std::string name, std::size_t dimension) : name_(std::move(name)), dimension_(dimension) {}

  void add_text(std::string_view text, DenseVector v) { by_hash_[sha256_hex(text)] = std::move(v); }
  void add_id(std::string id, DenseVector v) { by_id_[std::move(id)] = std::move(v); }

  const std::string& name() const override { return name_; }
  std::size_t dimension() const override { return dimension_; }

  DenseVector embed(std::string_view text) const override {
    const auto key = sha256_hex(text);
    auto it = by_hash_.find(key);
    if (it == by_hash_.end()) throw MissingEmbeddingError("text_sha256=" + key);
    return it->second;
  }

  DenseVector embed_id(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw MissingEmbeddingError(id);
    return it->second;
  }

 private:
  std::string name_;
  std::size_t dimension_ = 0;
  std::unordered_map<std::string, DenseVector> by_id_;
  std::unordered_map<std::string, DenseVector> by_hash_;
};

namespace detail {

// POST {base}/{endpoint} with {"texts": [...]}; the reply is a JSON array
// (or an object holding one under `field`) aligned with the inputs.
inline nlohmann::json post_texts(const std::string& base_url, const std::string& endpoint, const char* field,
                                 const std::vector<std::string>& texts, std::chrono::milliseconds timeout) {
  std::string url = base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  url += endpoint;
  const auto res = http::post_json(url, nlohmann::json{{"texts", texts}}.dump(), timeout);
  if (res.status < 200 || res.status >= 300)
    throw TransportError("provider at " + url + " answered HTTP " + std::to_string(res.status));
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::exception&) {
    throw TransportError("provider at " + url + " returned malformed JSON");
  }
  if (body.is_object() && body.contains(field)) body = body[field];
  if (!body.is_array() || body.size() != texts.size())
    throw TransportError("provider at " + url + " returned " + std::to_string(body.is_array() ? body.size() : 0) +
                         " results for " + std::to_string(texts.size()) + " texts");
  return body;
}

}  // namespace detail

// Embedding service: POST /embed. Results are memoized so repeated texts
// return the same vector.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string base_url, std::string name, std::size_t dimension,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : base_url_(std::move(base_url)), name_(std::move(name)), dimension_(dimension), timeout_(timeout) {}

  const std::string& name() const override { return name_; }
  std::size_t dimension() const override { return dimension_; }

  DenseVector embed(std::string_view text) const override {
    {
      std::lock_guard lock(mutex_);
      auto it = memo_.find(std::string(text));
      if (it != memo_.end()) return it->second;
    }
    const auto body = detail::post_texts(base_url_, "/embed", "embeddings", {std::string(text)}, timeout_);
    DenseVector v;
    try {
      v = body.at(0).get<DenseVector>();
    } catch (const nlohmann::json::exception&) {
      throw TransportError("embedding provider returned a non-numeric vector");
    }
    if (v.size() != dimension_)
      throw ValidationError("embedding from '" + name_ + "' has dimension " + std::to_string(v.size()) +
                            ", manifest says " + std::to_string(dimension_));
    std::lock_guard lock(mutex_);
    return memo_.emplace(std::string(text), std::move(v)).first->second;
  }

 private:
  std::string base_url_;
  std::string name_;
  std::size_t dimension_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, DenseVector> memo_;
};

// ---------------------------------------------------------------------------
// Named entities

// Entity surface string -> occurrence count (always >= 1).
using EntitySet = std::map<std::string, int>;

inline EntitySet entity_set_from_json(const nlohmann::json& j, bool lowercase) {
  EntitySet out;
  auto add = [&](std::string s, int count) {
    if (count < 1) throw ValidationError("entity count must be at least 1");
    if (lowercase) s = to_lower_utf8(s);
    out[s] += count;
  };
  if (j.is_array()) {
    for (const auto& e : j) add(e.get<std::string>(), 1);
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) add(k, v.get<int>());
  } else {
    throw ValidationError("entities must be a list or an object of counts");
  }
  return out;
}

class NerProvider {
 public:
  virtual ~NerProvider() = default;
  virtual const std::string& name() const = 0;
  virtual EntitySet extract(std::string_view text) const = 0;
};

// Capitalized-run heuristic: maximal runs of capitalized tokens, case-folded.
// A lone capitalized word at the start of a sentence is not an entity, but a
// run of two or more starting there is.
class HeuristicNer : public NerProvider {
 public:
  const std::string& name() const override {
    static const std::string kName = "heuristic";
    return kName;
  }

  EntitySet extract(std::string_view text) const override {
    struct Token {
      std::string word;
      bool capitalized;
      bool sentence_start;
      bool ends_clause;  // trailing punctuation closes any run
    };
    std::vector<Token> tokens;
    bool at_start = true;
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      if (i >= text.size()) break;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      std::string_view raw = text.substr(i, j - i);
      i = j;

      // Strip leading/trailing punctuation.
      std::size_t a = 0, b = raw.size();
      while (a < b) {
        std::size_t k = a;
        if (is_alnum_cp(next_code_point(raw, k))) break;
        a = k;
      }
      std::size_t last_alnum_end = a;
      for (std::size_t k = a; k < b;) {
        const char32_t cp = next_code_point(raw, k);
        if (is_alnum_cp(cp)) last_alnum_end = k;
      }
      b = last_alnum_end;
      const std::string_view word = raw.substr(a, b - a);
      const std::string_view tail = raw.substr(b);
      const bool ends_sentence = tail.find_first_of(".!?") != std::string_view::npos;
      if (!word.empty()) {
        std::size_t k = 0;
        tokens.push_back({std::string(word), is_upper_cp(next_code_point(word, k)), at_start, !tail.empty()});
      }
      at_start = ends_sentence || (word.empty() && at_start);
    }

    EntitySet out;
    for (std::size_t t = 0; t < tokens.size();) {
      if (!tokens[t].capitalized) {
        ++t;
        continue;
      }
      std::size_t e = t + 1;
      if (!tokens[t].ends_clause)
        while (e < tokens.size() && tokens[e].capitalized && !tokens[e].sentence_start) {
          ++e;
          if (tokens[e - 1].ends_clause) break;
        }
      const bool lone_sentence_initial = tokens[t].sentence_start && e - t == 1;
      if (!lone_sentence_initial) {
        std::string entity;
        for (std::size_t k = t; k < e; ++k) {
          if (k > t) entity.push_back(' ');
          entity += tokens[k].word;
        }
        out[to_lower_utf8(entity)] += 1;
      }
      t = e;
    }
    return out;
  }
};

// Precomputed entity sets keyed by "id" or "text_sha256", one JSON object per
// line with an "entities" list or count map. Sets are returned as stored.
class FileNerProvider : public NerProvider {
 public:
  static FileNerProvider load(const std::filesystem::path& table, std::string name) {
    FileNerProvider p;
    p.name_ = std::move(name);
    const std::string content = read_file(table);
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
      std::size_t end = content.find('\n', pos);
      if (end == std::string::npos) end = content.size();
      const std::string_view line(content.data() + pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        const auto rec = nlohmann::json::parse(line);
        EntitySet set = entity_set_from_json(rec.at("entities"), false);
        if (rec.contains("id")) p.by_id_[rec["id"].get<std::string>()] = set;
        if (rec.contains("text_sha256")) p.by_hash_[rec["text_sha256"].get<std::string>()] = set;
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(table.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    return p;
  }

  FileNerProvider() = default;
  explicit FileNerProvider(std::string name) : name_(std::move(name)) {}

  void add_text(std::string_view text, EntitySet set) { by_hash_[sha256_hex(text)] = std::move(set); }

  const std::string& name() const override { return name_; }

  EntitySet extract(std::string_view text) const override {
    const auto key = sha256_hex(text);
    auto it = by_hash_.find(key);
    if (it == by_hash_.end()) throw ValidationError("no stored entities for text_sha256=" + key);
    return it->second;
  }

  EntitySet extract_id(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw ValidationError("no stored entities for id '" + id + "'");
    return it->second;
  }

 private:
  std::string name_;
  std::unordered_map<std::string, EntitySet> by_id_;
  std::unordered_map<std::string, EntitySet> by_hash_;
};

// Entity service: POST /entities.
class HttpNerProvider : public NerProvider {
 public:
  HttpNerProvider(std::string base_url, std::string name, bool lowercase = true,
                  std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : base_url_(std::move(base_url)), name_(std::move(name)), lowercase_(lowercase), timeout_(timeout) {}

  const std::string& name() const override { return name_; }

  EntitySet extract(std::string_view text) const override {
    {
      std::lock_guard lock(mutex_);
      auto it = memo_.find(std::string(text));
      if (it != memo_.end()) return it->second;
    }
    const auto body = detail::post_texts(base_url_, "/entities", "entities", {std::string(text)}, timeout_);
    EntitySet set;
    try {
      set = entity_set_from_json(body.at(0), lowercase_);
    } catch (const nlohmann::json::exception&) {
      throw TransportError("entity provider returned a malformed entity list");
    }
    std::lock_guard lock(mutex_);
    return memo_.emplace(std::string(text), std::move(set)).first->second;
  }

 private:
  std::string base_url_;
  std::string name_;
  bool lowercase_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, EntitySet> memo_;
};

// Entities of `text` from `provider`; a null provider means the heuristic.
// With `fallback`, provider failures degrade to the heuristic instead of
// propagating.
inline EntitySet extract_entity_set(const NerProvider* provider, std::string_view text, bool fallback = false) {
  if (provider == nullptr) return HeuristicNer{}.extract(text);
  try {
    return provider->extract(text);
  } catch (const Error&) {
    if (!fallback) throw;
    return HeuristicNer{}.extract(text);
  }
}

}  // namespace claimkit
