#pragma once

// Binary classifiers over similarity feature vectors, the single-score
// threshold baseline, and permutation feature importance.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "claimkit/error.hpp"
#include "claimkit/features.hpp"
#include "claimkit/metrics.hpp"
#include "claimkit/util.hpp"

namespace claimkit {

enum class ClassifierKind { Knn, DecisionTree, RandomForest, GaussianNb, LinearMaxMargin };

inline const char* to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::DecisionTree: return "decision_tree";
    case ClassifierKind::RandomForest: return "random_forest";
    case ClassifierKind::GaussianNb: return "gaussian_nb";
    case ClassifierKind::LinearMaxMargin: return "linear_max_margin";
  }
  return "?";
}

inline ClassifierKind parse_classifier_kind(std::string_view s) {
  for (auto k : {ClassifierKind::Knn, ClassifierKind::DecisionTree, ClassifierKind::RandomForest,
                 ClassifierKind::GaussianNb, ClassifierKind::LinearMaxMargin})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown classifier kind '" + std::string(s) + "'");
}

// Hyperparameters of every family; each kind reads only its own.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::DecisionTree;
  // knn
  int k = 5;
  // decision_tree, random_forest
  int max_depth = 32;
  int min_leaf = 1;
  // random_forest
  int n_trees = 100;
  bool bootstrap = true;
  int max_features = 0;  // features tried per split; 0 means ceil(sqrt(d))
  // random_forest, linear_max_margin
  std::uint64_t seed = 0;
  // linear_max_margin
  double regularization = 1e-3;
  int epochs = 200;
  double learning_rate = 0.1;

  void validate() const {
    if (k < 1) throw ValidationError("knn k must be at least 1");
    if (max_depth < 1) throw ValidationError("max_depth must be at least 1");
    if (min_leaf < 1) throw ValidationError("min_leaf must be at least 1");
    if (n_trees < 1) throw ValidationError("n_trees must be at least 1");
    if (max_features < 0) throw ValidationError("max_features must be non-negative");
    if (regularization < 0.0) throw ValidationError("regularization must be non-negative");
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  }
};

inline nlohmann::json to_json(const ClassifierSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"k", s.k},
          {"max_depth", s.max_depth},
          {"min_leaf", s.min_leaf},
          {"n_trees", s.n_trees},
          {"bootstrap", s.bootstrap},
          {"max_features", s.max_features},
          {"seed", s.seed},
          {"regularization", s.regularization},
          {"epochs", s.epochs},
          {"learning_rate", s.learning_rate}};
}

// Missing keys take their defaults.
inline ClassifierSpec classifier_spec_from_json(const nlohmann::json& j) {
  ClassifierSpec s;
  s.kind = parse_classifier_kind(j.at("kind").get<std::string>());
  s.k = j.value("k", s.k);
  s.max_depth = j.value("max_depth", s.max_depth);
  s.min_leaf = j.value("min_leaf", s.min_leaf);
  s.n_trees = j.value("n_trees", s.n_trees);
  s.bootstrap = j.value("bootstrap", s.bootstrap);
  s.max_features = j.value("max_features", s.max_features);
  s.seed = j.value("seed", s.seed);
  s.regularization = j.value("regularization", s.regularization);
  s.epochs = j.value("epochs", s.epochs);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.validate();
  return s;
}

using Rows = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// Learned parameters per family

struct KnnParams {
  int k = 1;
  Rows points;
  std::vector<int> labels;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  int label = 0;
};

struct TreeParams {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestParams {
  std::vector<TreeParams> trees;
};

struct GaussianNbParams {
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> var;
};

struct LinearParams {
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::vector<double> weights;
  double bias = 0.0;
};

using LearnedParams = std::variant<KnnParams, TreeParams, ForestParams, GaussianNbParams, LinearParams>;

struct TrainedModel {
  ClassifierSpec spec;
  std::string config_hash;
  std::size_t n_features = 0;
  LearnedParams params;
};

namespace detail {

inline void check_training_data(const Rows& x, std::span<const int> y) {
  if (x.size() != y.size())
    throw ValidationError("feature rows (" + std::to_string(x.size()) + ") and labels (" + std::to_string(y.size()) +
                          ") differ in length");
  if (x.size() < 2) throw ValidationError("training needs at least two samples");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("labels must be binary (0/1)");
    has0 |= v == 0;
    has1 |= v == 1;
  }
  if (!has0 || !has1) throw ValidationError("training labels contain a single class");
  const std::size_t d = x.front().size();
  for (const auto& row : x)
    if (row.size() != d) throw ValidationError("ragged feature matrix");
}

inline int knn_predict(const KnnParams& p, std::span<const double> x) {
  std::vector<std::pair<double, std::size_t>> dist(p.points.size());
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = p.points[i][j] - x[j];
      s += d * d;
    }
    dist[i] = {s, i};
  }
  const std::size_t k = std::min<std::size_t>(p.k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::size_t ones = 0;
  for (std::size_t i = 0; i < k; ++i) ones += p.labels[dist[i].second] == 1;
  return 2 * ones > k ? 1 : 0;
}

inline int tree_predict(const TreeParams& t, std::span<const double> x) {
  int node = 0;
  while (t.nodes[node].feature >= 0) {
    const auto& n = t.nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return t.nodes[node].label;
}

// Greedy Gini tree builder. With a feature subsampler, each split considers a
// seeded random subset of features; otherwise all of them.
class TreeBuilder {
 public:
  TreeBuilder(const Rows& x, std::span<const int> y, int max_depth, int min_leaf, int max_features, Rng* rng)
      : x_(x), y_(y), max_depth_(max_depth), min_leaf_(min_leaf), max_features_(max_features), rng_(rng) {}

  TreeParams build(std::vector<std::size_t> samples) {
    TreeParams t;
    grow(t, std::move(samples), 0);
    return t;
  }

 private:
  static double gini(std::size_t n, std::size_t ones) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(ones) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = x_.front().size();
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (rng_ == nullptr || static_cast<std::size_t>(max_features_) >= d) return all;
    for (std::size_t i = 0; i < static_cast<std::size_t>(max_features_); ++i)
      std::swap(all[i], all[i + rng_->below(d - i)]);
    all.resize(max_features_);
    std::sort(all.begin(), all.end());
    return all;
  }

  int grow(TreeParams& t, std::vector<std::size_t> samples, int depth) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    std::size_t ones = 0;
    for (auto i : samples) ones += y_[i] == 1;
    const std::size_t n = samples.size();
    t.nodes[id].label = 2 * ones > n ? 1 : 0;
    if (ones == 0 || ones == n || depth >= max_depth_ || n < 2 * static_cast<std::size_t>(min_leaf_)) return id;

    // Lowest weighted child impurity; ties keep the earliest (feature, threshold).
    double best_impurity = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order(samples);
    for (std::size_t f : candidate_features()) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x_[a][f] < x_[b][f]; });
      std::size_t left_ones = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_ones += y_[order[i]] == 1;
        const double lo = x_[order[i]][f], hi = x_[order[i + 1]][f];
        if (!(lo < hi)) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < static_cast<std::size_t>(min_leaf_) || nr < static_cast<std::size_t>(min_leaf_)) continue;
        const double impurity =
            (static_cast<double>(nl) * gini(nl, left_ones) + static_cast<double>(nr) * gini(nr, ones - left_ones)) /
            static_cast<double>(n);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : samples) (x_[i][best_feature] <= best_threshold ? left : right).push_back(i);
    samples.clear();
    samples.shrink_to_fit();
    t.nodes[id].feature = best_feature;
    t.nodes[id].threshold = best_threshold;
    const int l = grow(t, std::move(left), depth + 1);
    t.nodes[id].left = l;
    const int r = grow(t, std::move(right), depth + 1);
    t.nodes[id].right = r;
    return id;
  }

  const Rows& x_;
  std::span<const int> y_;
  int max_depth_;
  int min_leaf_;
  int max_features_;
  Rng* rng_;
};

inline double gaussian_log_likelihood(double x, double mean, double var) {
  constexpr double kLog2Pi = 1.8378770664093453;
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

inline int nb_predict(const GaussianNbParams& p, std::span<const double> x) {
  std::array<double, 2> score = p.log_prior;
  for (int c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < x.size(); ++j) score[c] += gaussian_log_likelihood(x[j], p.mean[c][j], p.var[c][j]);
  return score[1] > score[0] ? 1 : 0;
}

inline double linear_margin(const LinearParams& p, std::span<const double> x) {
  double s = p.bias;
  for (std::size_t j = 0; j < x.size(); ++j) s += p.weights[j] * (x[j] - p.feature_mean[j]) / p.feature_scale[j];
  return s;
}

inline void check_finite_rows(const Rows& x) {
  for (const auto& row : x)
    for (double v : row)
      if (!std::isfinite(v)) throw ValidationError("feature matrix contains a non-finite value");
}

}  // namespace detail

// Fits one classifier. Deterministic given (spec, data, spec.seed).
inline TrainedModel train_classifier(const ClassifierSpec& spec, const Rows& x, std::span<const int> y,
                                     std::string config_hash = {}, unsigned jobs = 1) {
  spec.validate();
  detail::check_training_data(x, y);
  detail::check_finite_rows(x);
  const std::size_t n = x.size(), d = x.front().size();
  TrainedModel model;
  model.spec = spec;
  model.config_hash = std::move(config_hash);
  model.n_features = d;

  switch (spec.kind) {
    case ClassifierKind::Knn: {
      model.params = KnnParams{spec.k, x, std::vector<int>(y.begin(), y.end())};
      break;
    }
    case ClassifierKind::DecisionTree: {
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      detail::TreeBuilder builder(x, y, spec.max_depth, spec.min_leaf, 0, nullptr);
      model.params = builder.build(std::move(all));
      break;
    }
    case ClassifierKind::RandomForest: {
      const int per_split = spec.max_features > 0
                                ? spec.max_features
                                : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
      ForestParams forest;
      forest.trees.resize(spec.n_trees);
      parallel_for(forest.trees.size(), jobs, [&](std::size_t t) {
        Rng rng(splitmix64(spec.seed + t));
        std::vector<std::size_t> samples(n);
        if (spec.bootstrap)
          for (auto& s : samples) s = rng.below(n);
        else
          std::iota(samples.begin(), samples.end(), 0);
        detail::TreeBuilder builder(x, y, spec.max_depth, spec.min_leaf, per_split, &rng);
        forest.trees[t] = builder.build(std::move(samples));
      });
      model.params = std::move(forest);
      break;
    }
    case ClassifierKind::GaussianNb: {
      GaussianNbParams p;
      std::array<std::size_t, 2> count{};
      for (int c = 0; c < 2; ++c) {
        p.mean[c].assign(d, 0.0);
        p.var[c].assign(d, 0.0);
      }
      for (std::size_t i = 0; i < n; ++i) {
        ++count[y[i]];
        for (std::size_t j = 0; j < d; ++j) p.mean[y[i]][j] += x[i][j];
      }
      for (int c = 0; c < 2; ++c)
        for (auto& m : p.mean[c]) m /= static_cast<double>(count[c]);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          const double dv = x[i][j] - p.mean[y[i]][j];
          p.var[y[i]][j] += dv * dv;
        }
      for (int c = 0; c < 2; ++c) {
        for (auto& v : p.var[c]) v = std::max(v / static_cast<double>(count[c]), 1e-9);
        p.log_prior[c] = std::log(static_cast<double>(count[c]) / static_cast<double>(n));
      }
      model.params = std::move(p);
      break;
    }
    case ClassifierKind::LinearMaxMargin: {
      LinearParams p;
      p.feature_mean.assign(d, 0.0);
      p.feature_scale.assign(d, 0.0);
      for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) p.feature_mean[j] += row[j];
      for (auto& m : p.feature_mean) m /= static_cast<double>(n);
      for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) {
          const double dv = row[j] - p.feature_mean[j];
          p.feature_scale[j] += dv * dv;
        }
      for (auto& s : p.feature_scale) {
        s = std::sqrt(s / static_cast<double>(n));
        if (!(s > 0.0)) s = 1.0;
      }
      Rows z(n, std::vector<double>(d));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) z[i][j] = (x[i][j] - p.feature_mean[j]) / p.feature_scale[j];

      // Hinge loss + L2, stochastic subgradient steps in seeded order.
      p.weights.assign(d, 0.0);
      Rng rng(spec.seed);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      const double lambda = spec.regularization;
      std::size_t step = 0;
      for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
          ++step;
          const double eta = spec.learning_rate / (1.0 + spec.learning_rate * lambda * static_cast<double>(step));
          const double target = y[i] == 1 ? 1.0 : -1.0;
          double s = p.bias;
          for (std::size_t j = 0; j < d; ++j) s += p.weights[j] * z[i][j];
          for (auto& w : p.weights) w *= 1.0 - eta * lambda;
          if (target * s < 1.0) {
            for (std::size_t j = 0; j < d; ++j) p.weights[j] += eta * target * z[i][j];
            p.bias += eta * target;
          }
        }
      }
      model.params = std::move(p);
      break;
    }
  }
  return model;
}

inline TrainedModel train_classifier(const ClassifierSpec& spec, const FeatureMatrix& m, unsigned jobs = 1) {
  return train_classifier(spec, m.rows, m.labels, m.config_hash, jobs);
}

// Prediction on raw rows; checks only the row width.
inline std::vector<int> predict_rows(const TrainedModel& model, const Rows& x) {
  std::vector<int> out;
  out.reserve(x.size());
  for (const auto& row : x) {
    if (row.size() != model.n_features)
      throw ValidationError("row has " + std::to_string(row.size()) + " features, model expects " +
                            std::to_string(model.n_features));
    const int label = std::visit(
        [&](const auto& p) -> int {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, KnnParams>) {
            return detail::knn_predict(p, row);
          } else if constexpr (std::is_same_v<P, TreeParams>) {
            return detail::tree_predict(p, row);
          } else if constexpr (std::is_same_v<P, ForestParams>) {
            std::size_t ones = 0;
            for (const auto& t : p.trees) ones += detail::tree_predict(t, row) == 1;
            return 2 * ones > p.trees.size() ? 1 : 0;
          } else if constexpr (std::is_same_v<P, GaussianNbParams>) {
            return detail::nb_predict(p, row);
          } else {
            return detail::linear_margin(p, row) > 0.0 ? 1 : 0;
          }
        },
        model.params);
    out.push_back(label);
  }
  return out;
}

// Rejects matrices built under a different feature config.
inline std::vector<int> predict(const TrainedModel& model, const FeatureMatrix& m) {
  if (m.config_hash != model.config_hash)
    throw ValidationError("feature config hash " + m.config_hash + " does not match the model's " +
                          model.config_hash);
  if (m.width() != model.n_features && !m.rows.empty())
    throw ValidationError("matrix has " + std::to_string(m.width()) + " features, model expects " +
                          std::to_string(model.n_features));
  return predict_rows(model, m.rows);
}

// ---------------------------------------------------------------------------
// Threshold baseline

struct ThresholdResult {
  double threshold = 0.0;  // predict 1 when score >= threshold; may be +-inf
  double f1 = 0.0;
};

// Candidate thresholds: -inf, midpoints between consecutive distinct scores,
// +inf. Returns the F1-maximizing one; ties go to the smaller threshold.
inline ThresholdResult threshold_baseline(std::span<const double> scores, std::span<const int> y) {
  if (scores.size() != y.size()) throw ValidationError("scores and labels differ in length");
  std::size_t positives = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("labels must be binary (0/1)");
    positives += v == 1;
  }
  if (positives == 0 || positives == y.size()) throw ValidationError("threshold baseline needs both classes");
  for (double s : scores)
    if (std::isnan(s)) throw ValidationError("score is NaN");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  auto f1_of = [&](std::size_t tp, std::size_t predicted) {
    const std::size_t fp = predicted - tp, fn = positives - tp;
    return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  };

  // At -inf everything is predicted positive.
  ThresholdResult best{-std::numeric_limits<double>::infinity(), f1_of(positives, scores.size())};
  std::size_t tp = positives, predicted = scores.size();
  for (std::size_t i = 0; i < order.size();) {
    // Drop the block of equal scores starting at i from the positive side.
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp -= y[order[j]] == 1;
      --predicted;
      ++j;
    }
    double threshold = std::numeric_limits<double>::infinity();
    if (j < order.size()) {
      const double lo = scores[order[i]], hi = scores[order[j]];
      threshold = lo + (hi - lo) / 2.0;
      if (!(threshold > lo)) threshold = hi;
    }
    const double f1 = f1_of(tp, predicted);
    if (f1 > best.f1) best = {threshold, f1};
    i = j;
  }
  return best;
}

// Baseline F1 minus the mean F1 after shuffling one column, per feature.
inline std::vector<double> permutation_importance(const TrainedModel& model, const FeatureMatrix& m,
                                                  std::uint64_t seed, int repeats = 5) {
  if (repeats < 1) throw ValidationError("repeats must be at least 1");
  const auto y = std::span<const int>(m.labels);
  const double base = prf1(y, predict(model, m), 1).f1;
  std::vector<double> importance(m.width(), 0.0);
  for (std::size_t f = 0; f < m.width(); ++f) {
    double sum = 0.0;
    for (int r = 0; r < repeats; ++r) {
      FeatureMatrix shuffled = m;
      std::vector<double> column(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) column[i] = m.rows[i][f];
      Rng rng(sub_seed(seed, "perm:" + std::to_string(f) + ":" + std::to_string(r)));
      rng.shuffle(column);
      for (std::size_t i = 0; i < m.size(); ++i) shuffled.rows[i][f] = column[i];
      sum += prf1(y, predict(model, shuffled), 1).f1;
    }
    importance[f] = base - sum / repeats;
  }
  return importance;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json tree_to_json(const TreeParams& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
  return nodes;
}

inline TreeParams tree_from_json(const nlohmann::json& j) {
  TreeParams t;
  for (const auto& n : j)
    t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                       n.at(4).get<int>()});
  if (t.nodes.empty()) throw ValidationError("tree without nodes");
  for (const auto& n : t.nodes) {
    const int size = static_cast<int>(t.nodes.size());
    if (n.feature >= 0 && (n.left <= 0 || n.left >= size || n.right <= 0 || n.right >= size))
      throw ValidationError("tree node has out-of-range children");
  }
  return t;
}

}  // namespace detail

inline nlohmann::json to_json(const TrainedModel& m) {
  nlohmann::json params = std::visit(
      [](const auto& p) -> nlohmann::json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, KnnParams>) {
          return {{"k", p.k}, {"points", p.points}, {"labels", p.labels}};
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          return {{"nodes", detail::tree_to_json(p)}};
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          nlohmann::json trees = nlohmann::json::array();
          for (const auto& t : p.trees) trees.push_back(detail::tree_to_json(t));
          return {{"trees", trees}};
        } else if constexpr (std::is_same_v<P, GaussianNbParams>) {
          return {{"log_prior", p.log_prior}, {"mean", p.mean}, {"var", p.var}};
        } else {
          return {{"feature_mean", p.feature_mean},
                  {"feature_scale", p.feature_scale},
                  {"weights", p.weights},
                  {"bias", p.bias}};
        }
      },
      m.params);
  return {{"format", "claimkit-model"},
          {"version", kModelFormatVersion},
          {"spec", to_json(m.spec)},
          {"seed", m.spec.seed},
          {"config_hash", m.config_hash},
          {"n_features", m.n_features},
          {"params", params}};
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "claimkit-model") throw ValidationError("not a claimkit model");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw ValidationError("unsupported model version " + j.at("version").dump());
    TrainedModel m;
    m.spec = classifier_spec_from_json(j.at("spec"));
    m.config_hash = j.at("config_hash").get<std::string>();
    m.n_features = j.at("n_features").get<std::size_t>();
    const auto& p = j.at("params");
    switch (m.spec.kind) {
      case ClassifierKind::Knn:
        m.params = KnnParams{p.at("k").get<int>(), p.at("points").get<Rows>(), p.at("labels").get<std::vector<int>>()};
        break;
      case ClassifierKind::DecisionTree: m.params = detail::tree_from_json(p.at("nodes")); break;
      case ClassifierKind::RandomForest: {
        ForestParams f;
        for (const auto& t : p.at("trees")) f.trees.push_back(detail::tree_from_json(t));
        m.params = std::move(f);
        break;
      }
      case ClassifierKind::GaussianNb: {
        GaussianNbParams g;
        g.log_prior = p.at("log_prior").get<std::array<double, 2>>();
        g.mean = p.at("mean").get<std::array<std::vector<double>, 2>>();
        g.var = p.at("var").get<std::array<std::vector<double>, 2>>();
        m.params = std::move(g);
        break;
      }
      case ClassifierKind::LinearMaxMargin: {
        LinearParams l;
        l.feature_mean = p.at("feature_mean").get<std::vector<double>>();
        l.feature_scale = p.at("feature_scale").get<std::vector<double>>();
        l.weights = p.at("weights").get<std::vector<double>>();
        l.bias = p.at("bias").get<double>();
        m.params = std::move(l);
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace claimkit
