#pragma once

// Per-pair similarity feature vectors: the ensemble's input.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimkit/corpus.hpp"
#include "claimkit/csv.hpp"
#include "claimkit/error.hpp"
#include "claimkit/simmetrics.hpp"
#include "claimkit/textrep.hpp"
#include "claimkit/util.hpp"

namespace claimkit {

// The seven representation techniques. The translated variants compute the
// same thing as their base technique; they differ only in which provider
// supplies vectors/entities for the translated texts.
enum class Technique : int {
  Tfidf = 1,
  Embedding = 2,
  EmbeddingTranslated = 3,
  SentenceEmbedding = 4,
  SentenceEmbeddingTranslated = 5,
  Entities = 6,
  EntitiesTranslated = 7,
};

inline const char* to_string(Technique t) {
  switch (t) {
    case Technique::Tfidf: return "tfidf";
    case Technique::Embedding: return "emb";
    case Technique::EmbeddingTranslated: return "emb_tr";
    case Technique::SentenceEmbedding: return "sent";
    case Technique::SentenceEmbeddingTranslated: return "sent_tr";
    case Technique::Entities: return "ner";
    case Technique::EntitiesTranslated: return "ner_tr";
  }
  return "?";
}

inline Technique parse_technique(std::string_view s) {
  for (int i = 1; i <= 7; ++i)
    if (s == to_string(static_cast<Technique>(i))) return static_cast<Technique>(i);
  throw ValidationError("unknown technique '" + std::string(s) + "'");
}

inline bool uses_embeddings(Technique t) { return t >= Technique::Embedding && t <= Technique::SentenceEmbeddingTranslated; }
inline bool uses_sentences(Technique t) {
  return t == Technique::SentenceEmbedding || t == Technique::SentenceEmbeddingTranslated;
}
inline bool uses_entities(Technique t) { return t == Technique::Entities || t == Technique::EntitiesTranslated; }

struct FeatureSpec {
  Technique technique = Technique::Tfidf;
  std::optional<TfidfParams> tfidf;  // technique 1 only
  std::string provider;              // techniques 2-7; "heuristic" is always available for entities
  Metric metric = Metric::Cosine;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;

  void validate() const {
    if (technique == Technique::Tfidf) {
      if (!tfidf) throw ValidationError("tfidf feature spec without parameters");
      tfidf->validate();
    } else if (provider.empty()) {
      throw ValidationError(std::string(to_string(technique)) + " feature spec without provider");
    }
    if (uses_entities(technique) == is_vector_metric(metric))
      throw ValidationError(std::string("metric '") + to_string(metric) + "' does not fit technique '" +
                            to_string(technique) + "'");
  }

  std::string id() const {
    const std::string rep = technique == Technique::Tfidf ? tfidf->id()
                                                          : std::string(to_string(technique)) + "[" + provider + "]";
    return rep + ":" + to_string(metric);
  }
};

inline nlohmann::json to_json(const FeatureSpec& s) {
  nlohmann::json j{{"technique", to_string(s.technique)}, {"metric", to_string(s.metric)}};
  if (s.tfidf) j["tfidf"] = to_json(*s.tfidf);
  if (!s.provider.empty()) j["provider"] = s.provider;
  return j;
}

inline FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
  FeatureSpec s;
  s.technique = parse_technique(j.at("technique").get<std::string>());
  s.metric = parse_metric(j.at("metric").get<std::string>());
  if (j.contains("tfidf")) s.tfidf = tfidf_params_from_json(j["tfidf"]);
  if (j.contains("provider")) s.provider = j["provider"].get<std::string>();
  s.validate();
  return s;
}

struct FeatureConfig {
  std::vector<FeatureSpec> specs;  // order is the feature order
  double neg_euclidean_floor = kDefaultNegEuclideanFloor;
  bool ner_fallback = false;

  void validate() const {
    if (specs.empty()) throw ValidationError("feature config has no specs");
    std::set<std::string> ids;
    for (const auto& s : specs) {
      s.validate();
      if (!ids.insert(s.id()).second) throw ValidationError("duplicate feature spec " + s.id());
    }
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& s : specs) out.push_back(s.id());
    return out;
  }
};

inline nlohmann::json to_json(const FeatureConfig& c) {
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& s : c.specs) specs.push_back(to_json(s));
  return {{"specs", specs}, {"neg_euclidean_floor", c.neg_euclidean_floor}, {"ner_fallback", c.ner_fallback}};
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& j) {
  FeatureConfig c;
  for (const auto& s : j.at("specs")) c.specs.push_back(feature_spec_from_json(s));
  c.neg_euclidean_floor = j.value("neg_euclidean_floor", kDefaultNegEuclideanFloor);
  c.ner_fallback = j.value("ner_fallback", false);
  c.validate();
  return c;
}

// SHA-256 of the canonical serialization (object keys sorted).
inline std::string config_hash(const FeatureConfig& c) { return sha256_hex(to_json(c).dump()); }

// Everything a config may refer to. TFIDF models are keyed by
// TfidfParams::id().
struct FeatureProviders {
  std::map<std::string, TfidfModel> tfidf;
  std::map<std::string, std::shared_ptr<const EmbeddingProvider>> embedders;
  std::map<std::string, std::shared_ptr<const NerProvider>> ners;
};

// Distinct statement and document texts of `pairs`, first occurrence order.
inline std::vector<std::string> fitting_corpus(const std::vector<LabeledPair>& pairs) {
  std::vector<std::string> corpus;
  std::unordered_set<std::string_view> seen;
  for (const auto& p : pairs)
    for (const std::string* t : {&p.claim, &p.text})
      if (seen.insert(*t).second) corpus.push_back(*t);
  return corpus;
}

// Fits every TFIDF model a config needs, sharing term statistics across
// settings with the same n-gram range.
inline void fit_tfidf_models(const FeatureConfig& config, const std::vector<std::string>& corpus,
                             FeatureProviders& providers) {
  std::map<std::pair<int, int>, TermStatistics> stats;
  for (const auto& spec : config.specs) {
    if (spec.technique != Technique::Tfidf) continue;
    const auto key = spec.tfidf->id();
    if (providers.tfidf.count(key)) continue;
    const std::pair<int, int> range{spec.tfidf->ngram_lo, spec.tfidf->ngram_hi};
    auto it = stats.find(range);
    if (it == stats.end()) it = stats.emplace(range, collect_term_statistics(corpus, range.first, range.second)).first;
    providers.tfidf.emplace(key, fit_tfidf(it->second, *spec.tfidf));
  }
}

struct FeatureVector {
  std::vector<double> values;
  std::string config_hash;
  std::string pair_id;
};

namespace detail {

inline const EmbeddingProvider& embedder_for(const FeatureSpec& spec, const FeatureProviders& providers) {
  auto it = providers.embedders.find(spec.provider);
  if (it == providers.embedders.end() || !it->second)
    throw ValidationError("embedding provider '" + spec.provider + "' is not available");
  return *it->second;
}

inline const NerProvider* ner_for(const FeatureSpec& spec, const FeatureProviders& providers) {
  if (spec.provider == "heuristic") return nullptr;
  auto it = providers.ners.find(spec.provider);
  if (it == providers.ners.end() || !it->second)
    throw ValidationError("entity provider '" + spec.provider + "' is not available");
  return it->second.get();
}

}  // namespace detail

// Value i is computed by spec i. Sentence specs compare the statement with
// each sentence of the document and keep the best score.
inline FeatureVector featurize_pair(std::string_view statement, std::string_view document, std::string pair_id,
                                    const FeatureConfig& config, const FeatureProviders& providers,
                                    const std::string& hash) {
  FeatureVector out;
  out.pair_id = std::move(pair_id);
  out.config_hash = hash;
  out.values.reserve(config.specs.size());
  std::optional<std::vector<std::string>> sentences;
  for (const auto& spec : config.specs) {
    double value = 0.0;
    switch (spec.technique) {
      case Technique::Tfidf: {
        auto it = providers.tfidf.find(spec.tfidf->id());
        if (it == providers.tfidf.end()) throw ValidationError("TFIDF model " + spec.tfidf->id() + " is not fitted");
        value = vector_similarity(spec.metric, it->second.transform(statement), it->second.transform(document)).value;
        break;
      }
      case Technique::Embedding:
      case Technique::EmbeddingTranslated: {
        const auto& e = detail::embedder_for(spec, providers);
        value = vector_similarity(spec.metric, get_embedding(e, statement), get_embedding(e, document)).value;
        break;
      }
      case Technique::SentenceEmbedding:
      case Technique::SentenceEmbeddingTranslated: {
        const auto& e = detail::embedder_for(spec, providers);
        if (!sentences) sentences = segment_sentences(document);
        std::vector<DenseVector> vecs;
        vecs.reserve(sentences->size());
        for (const auto& s : *sentences) vecs.push_back(get_embedding(e, s));
        value = max_sentence_similarity(get_embedding(e, statement), vecs, spec.metric, config.neg_euclidean_floor)
                    .value;
        break;
      }
      case Technique::Entities:
      case Technique::EntitiesTranslated: {
        const NerProvider* ner = detail::ner_for(spec, providers);
        value = set_similarity(spec.metric, extract_entity_set(ner, statement, config.ner_fallback),
                               extract_entity_set(ner, document, config.ner_fallback))
                    .value;
        break;
      }
    }
    if (!std::isfinite(value)) throw ValidationError("non-finite feature value for " + spec.id());
    out.values.push_back(value);
  }
  return out;
}

inline FeatureVector featurize_pair(std::string_view statement, std::string_view document, std::string pair_id,
                                    const FeatureConfig& config, const FeatureProviders& providers) {
  return featurize_pair(statement, document, std::move(pair_id), config, providers, config_hash(config));
}

// Rows aligned with the input pairs.
struct FeatureMatrix {
  std::vector<std::string> spec_ids;
  std::string config_hash;
  std::vector<std::string> pair_ids;
  std::vector<int> labels;  // label codes of the source pairs
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t width() const { return spec_ids.size(); }
};

inline FeatureMatrix featurize_set(const std::vector<LabeledPair>& pairs, const FeatureConfig& config,
                                   const FeatureProviders& providers, unsigned jobs = 1) {
  config.validate();
  FeatureMatrix m;
  m.spec_ids = config.ids();
  m.config_hash = config_hash(config);
  m.pair_ids.resize(pairs.size());
  m.labels.resize(pairs.size());
  m.rows.resize(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    auto fv = featurize_pair(pairs[i].claim, pairs[i].text, pairs[i].id, config, providers, m.config_hash);
    m.pair_ids[i] = std::move(fv.pair_id);
    m.labels[i] = label_code(pairs[i].label);
    m.rows[i] = std::move(fv.values);
  });
  return m;
}

// CSV with header pair_id,label,<spec ids>.
inline std::string feature_matrix_to_csv(const FeatureMatrix& m) {
  std::string out;
  std::vector<std::string> header{"pair_id", "label"};
  header.insert(header.end(), m.spec_ids.begin(), m.spec_ids.end());
  csv::append_row(out, header);
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    std::vector<std::string> fields{m.pair_ids[r], std::to_string(m.labels[r])};
    for (double v : m.rows[r]) fields.push_back(format_double(v));
    csv::append_row(out, fields);
  }
  return out;
}

// Inverse of feature_matrix_to_csv; the hash comes from the config the matrix
// was built with.
inline FeatureMatrix feature_matrix_from_csv(std::string_view text, const FeatureConfig& config) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw ValidationError("feature CSV is empty");
  const auto& header = rows.front().fields;
  if (header.size() < 2 || header[0] != "pair_id" || header[1] != "label")
    throw ValidationError("feature CSV must start with pair_id,label");
  FeatureMatrix m;
  m.spec_ids.assign(header.begin() + 2, header.end());
  if (m.spec_ids != config.ids()) throw ValidationError("feature CSV columns do not match the feature config");
  m.config_hash = config_hash(config);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != header.size())
      throw ValidationError("line " + std::to_string(rows[r].line) + ": expected " + std::to_string(header.size()) +
                            " fields");
    m.pair_ids.push_back(f[0]);
    std::vector<double> row;
    try {
      m.labels.push_back(std::stoi(f[1]));
      for (std::size_t c = 2; c < f.size(); ++c) row.push_back(std::stod(f[c]));
    } catch (const std::exception&) {
      throw ValidationError("line " + std::to_string(rows[r].line) + ": non-numeric value");
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

}  // namespace claimkit
