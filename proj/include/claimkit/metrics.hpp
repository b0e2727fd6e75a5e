#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "claimkit/error.hpp"

namespace claimkit {

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {
inline void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("length mismatch: " + std::to_string(a) + " truths vs " + std::to_string(b) + " predictions");
  if (a == 0) throw ValidationError("metrics need at least one sample");
}
}  // namespace detail

// Precision, recall and F1 of `positive`. Empty denominators give 0.
inline PrecisionRecallF1 prf1(std::span<const int> y_true, std::span<const int> y_pred, int positive = 1) {
  detail::check_lengths(y_true.size(), y_pred.size());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == positive, p = y_pred[i] == positive;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  PrecisionRecallF1 out;
  if (tp + fp) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn) out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (out.precision + out.recall > 0.0) out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

inline double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  detail::check_lengths(y_true.size(), y_pred.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

// Mean recall over the classes present in y_true.
inline double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  detail::check_lengths(y_true.size(), y_pred.size());
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // class -> (hits, support)
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    auto& [hits, support] = per_class[y_true[i]];
    ++support;
    hits += y_true[i] == y_pred[i];
  }
  double sum = 0.0;
  for (const auto& [c, hs] : per_class) sum += static_cast<double>(hs.first) / static_cast<double>(hs.second);
  return sum / static_cast<double>(per_class.size());
}

// counts[t][p] = samples of true class classes[t] predicted as classes[p].
struct ConfusionMatrix {
  std::vector<int> classes;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
      for (auto c : row) n += c;
    return n;
  }

  std::size_t trace() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
  }

  std::size_t support(std::size_t row) const {
    std::size_t n = 0;
    for (auto c : counts[row]) n += c;
    return n;
  }
};

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::vector<int> classes) {
  if (y_true.size() != y_pred.size())
    throw ValidationError("length mismatch: " + std::to_string(y_true.size()) + " truths vs " +
                          std::to_string(y_pred.size()) + " predictions");
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (!index.emplace(classes[i], i).second) throw ValidationError("duplicate class " + std::to_string(classes[i]));
  ConfusionMatrix m;
  m.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    auto t = index.find(y_true[i]), p = index.find(y_pred[i]);
    if (t == index.end()) throw ValidationError("label " + std::to_string(y_true[i]) + " outside the class list");
    if (p == index.end()) throw ValidationError("label " + std::to_string(y_pred[i]) + " outside the class list");
    ++m.counts[t->second][p->second];
  }
  m.classes = std::move(classes);
  return m;
}

}  // namespace claimkit
