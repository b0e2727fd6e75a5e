#pragma once

// Similarity measures over vectors and entity sets.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "claimkit/error.hpp"
#include "claimkit/textrep.hpp"

namespace claimkit {

enum class Metric {
  Cosine,
  NegEuclidean,
  Jaccard,
  Dice,
  Overlap,
  CosineSet,
  WeightedIntersection,
  UnionSize,
};

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::Cosine: return "cosine";
    case Metric::NegEuclidean: return "neg_euclidean";
    case Metric::Jaccard: return "jaccard";
    case Metric::Dice: return "dice";
    case Metric::Overlap: return "overlap";
    case Metric::CosineSet: return "cosine_set";
    case Metric::WeightedIntersection: return "weighted_intersection";
    case Metric::UnionSize: return "union_size";
  }
  return "?";
}

inline Metric parse_metric(std::string_view s) {
  for (Metric m : {Metric::Cosine, Metric::NegEuclidean, Metric::Jaccard, Metric::Dice, Metric::Overlap,
                   Metric::CosineSet, Metric::WeightedIntersection, Metric::UnionSize})
    if (s == to_string(m)) return m;
  throw ValidationError("unknown metric '" + std::string(s) + "'");
}

inline bool is_vector_metric(Metric m) { return m == Metric::Cosine || m == Metric::NegEuclidean; }

struct SimilarityScore {
  double value = 0.0;
  Metric metric = Metric::Cosine;
};

namespace detail {
inline void check_dims(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace detail

// u.v / (|u||v|), 0 when either norm is 0.
inline SimilarityScore cosine(std::span<const double> u, std::span<const double> v) {
  detail::check_dims(u.size(), v.size());
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return {0.0, Metric::Cosine};
  return {std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0), Metric::Cosine};
}

inline SimilarityScore neg_euclidean(std::span<const double> u, std::span<const double> v) {
  detail::check_dims(u.size(), v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return {-std::sqrt(s), Metric::NegEuclidean};
}

// Sparse forms walk the two sorted entry lists together.
inline SimilarityScore cosine(const SparseVector& u, const SparseVector& v) {
  detail::check_dims(u.dimension, v.dimension);
  double dot = 0.0;
  auto a = u.entries.begin(), b = v.entries.begin();
  while (a != u.entries.end() && b != v.entries.end()) {
    if (a->first < b->first)
      ++a;
    else if (b->first < a->first)
      ++b;
    else {
      dot += a->second * b->second;
      ++a;
      ++b;
    }
  }
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return {0.0, Metric::Cosine};
  return {std::clamp(dot / (nu * nv), -1.0, 1.0), Metric::Cosine};
}

inline SimilarityScore neg_euclidean(const SparseVector& u, const SparseVector& v) {
  detail::check_dims(u.dimension, v.dimension);
  double s = 0.0;
  auto a = u.entries.begin(), b = v.entries.begin();
  while (a != u.entries.end() || b != v.entries.end()) {
    if (b == v.entries.end() || (a != u.entries.end() && a->first < b->first)) {
      s += a->second * a->second;
      ++a;
    } else if (a == u.entries.end() || b->first < a->first) {
      s += b->second * b->second;
      ++b;
    } else {
      const double d = a->second - b->second;
      s += d * d;
      ++a;
      ++b;
    }
  }
  return {-std::sqrt(s), Metric::NegEuclidean};
}

inline SimilarityScore vector_similarity(Metric m, std::span<const double> u, std::span<const double> v) {
  if (m == Metric::Cosine) return cosine(u, v);
  if (m == Metric::NegEuclidean) return neg_euclidean(u, v);
  throw ValidationError(std::string("metric '") + to_string(m) + "' does not apply to vectors");
}

inline SimilarityScore vector_similarity(Metric m, const SparseVector& u, const SparseVector& v) {
  if (m == Metric::Cosine) return cosine(u, v);
  if (m == Metric::NegEuclidean) return neg_euclidean(u, v);
  throw ValidationError(std::string("metric '") + to_string(m) + "' does not apply to vectors");
}

// Set similarities. Cardinalities are taken over supports (distinct
// entities); weighted_intersection uses the occurrence counts. Every
// zero-denominator case yields 0.
inline SimilarityScore set_similarity(Metric kind, const EntitySet& a, const EntitySet& b) {
  double inter = 0.0, weighted = 0.0;
  double mass_a = 0.0, mass_b = 0.0;
  for (const auto& [e, c] : a) mass_a += c;
  for (const auto& [e, c] : b) mass_b += c;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end() && ib != b.end();) {
    if (ia->first < ib->first)
      ++ia;
    else if (ib->first < ia->first)
      ++ib;
    else {
      inter += 1.0;
      weighted += std::min(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double uni = na + nb - inter;
  auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  double value;
  switch (kind) {
    case Metric::Jaccard: value = ratio(inter, uni); break;
    case Metric::Dice: value = ratio(2.0 * inter, na + nb); break;
    case Metric::Overlap: value = ratio(inter, std::min(na, nb)); break;
    case Metric::CosineSet: value = ratio(inter, std::sqrt(na * nb)); break;
    case Metric::WeightedIntersection: value = ratio(weighted, std::min(mass_a, mass_b)); break;
    case Metric::UnionSize: value = ratio(uni, na + nb); break;
    default: throw ValidationError(std::string("metric '") + to_string(kind) + "' does not apply to entity sets");
  }
  return {value, kind};
}

// Floor of max_sentence_similarity over an empty sentence list for the
// negated distance; finite so feature vectors stay finite.
inline constexpr double kDefaultNegEuclideanFloor = -1e6;

// Highest statement-sentence similarity.
template <typename Vec>
SimilarityScore max_sentence_similarity(const Vec& statement, const std::vector<Vec>& sentences, Metric metric,
                                        double neg_euclidean_floor = kDefaultNegEuclideanFloor) {
  if (!is_vector_metric(metric))
    throw ValidationError(std::string("metric '") + to_string(metric) + "' does not apply to vectors");
  double best = metric == Metric::Cosine ? -1.0 : neg_euclidean_floor;
  bool any = false;
  for (const auto& s : sentences) {
    const double v = vector_similarity(metric, statement, s).value;
    if (!any || v > best) best = v;
    any = true;
  }
  return {best, metric};
}

}  // namespace claimkit
