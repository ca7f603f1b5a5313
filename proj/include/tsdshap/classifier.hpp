#pragma once

// Proxy source classifier: one-vs-rest L2-regularized linear SVM trained by
// deterministic Pegasos-style stochastic subgradient descent.
//
// Per class c the objective is
//   (reg_c / 2) |w|^2 + (1/m) sum_i max(0, 1 - y_i (w . x_i + b))
// with y_i = +1 for class c and -1 otherwise. Samples are visited in their
// given order every epoch, and step t (1-based, counted across epochs) uses
// learning rate 1 / (reg_c * t). The bias is unregularized. No shuffling,
// so identical inputs give bit-identical weights.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tsdshap/types.hpp"

namespace tsdshap {

struct ClassifierConfig {
  double reg_c = 1.0;
  std::size_t epochs = 100;

  void validate() const {
    if (!(reg_c > 0.0)) throw InvalidArgument("reg_c must be positive");
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  }
};

struct LinearModel {
  std::size_t dims = 0;
  std::size_t num_classes = 0;
  std::vector<double> weights;  // num_classes x dims, row-major
  std::vector<double> bias;     // num_classes
  std::vector<bool> classes_seen;
  // Set when fewer than two classes were present in training.
  bool constant = true;
  Label constant_class = 0;

  std::span<const double> class_weights(std::size_t c) const {
    return {weights.data() + c * dims, dims};
  }
};

namespace detail {

inline double dot(std::span<const double> w, std::span<const float> x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * x[k];
  return acc;
}

// One binary Pegasos problem; `positive[i]` gives the sign of sample i.
inline void train_binary(const EmbeddingMatrix& x, std::span<const Index> rows,
                         const std::vector<bool>& positive, const ClassifierConfig& cfg,
                         std::span<double> w, double& b) {
  std::ranges::fill(w, 0.0);
  b = 0.0;
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      ++t;
      const double eta = 1.0 / (cfg.reg_c * static_cast<double>(t));
      const auto xi = x.row(rows[k]);
      const double y = positive[k] ? 1.0 : -1.0;
      const double margin = y * (dot(w, xi) + b);
      const double shrink = 1.0 - eta * cfg.reg_c;
      for (double& wj : w) wj *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < w.size(); ++j) w[j] += eta * y * xi[j];
        b += eta * y;
      }
    }
  }
}

}  // namespace detail

// Train on the rows of `features` listed in `rows` (in that order), with
// `labels` giving the label of every row of `features`.
inline LinearModel train_linear(const EmbeddingMatrix& features, const LabelVector& labels,
                                std::span<const Index> rows, const ClassifierConfig& cfg) {
  if (features.cols() < 1) throw InvalidArgument("cannot train on zero feature columns");
  if (features.rows() != labels.size()) throw InvalidArgument("feature/label row count mismatch");
  cfg.validate();

  LinearModel model;
  model.dims = features.cols();
  model.num_classes = std::max<std::size_t>(labels.num_classes, 1);
  model.classes_seen.assign(model.num_classes, false);
  for (Index r : rows) model.classes_seen[labels[r]] = true;

  const auto seen = static_cast<std::size_t>(std::ranges::count(model.classes_seen, true));
  if (seen <= 1) {
    model.constant = true;
    model.constant_class = rows.empty() ? 0 : labels[rows.front()];
    return model;
  }
  model.constant = false;
  model.weights.assign(model.num_classes * model.dims, 0.0);
  model.bias.assign(model.num_classes, 0.0);

  std::vector<bool> positive(rows.size());
  auto train_class = [&](std::size_t c) {
    for (std::size_t k = 0; k < rows.size(); ++k) positive[k] = labels[rows[k]] == c;
    std::span<double> w(model.weights.data() + c * model.dims, model.dims);
    detail::train_binary(features, rows, positive, cfg, w, model.bias[c]);
  };

  if (seen == 2 && model.num_classes == 2) {
    // The two one-vs-rest problems are mirror images: every Pegasos update
    // commutes with negation, so class 0 is exactly the negated class 1.
    train_class(1);
    for (std::size_t j = 0; j < model.dims; ++j) model.weights[j] = -model.weights[model.dims + j];
    model.bias[0] = -model.bias[1];
  } else {
    for (std::size_t c = 0; c < model.num_classes; ++c) {
      if (model.classes_seen[c]) train_class(c);
    }
  }
  return model;
}

inline LinearModel train_linear(const EmbeddingMatrix& features, const LabelVector& labels,
                                const ClassifierConfig& cfg) {
  std::vector<Index> all(features.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return train_linear(features, labels, all, cfg);
}

// argmax_c w_c . x + b_c; ties go to the lowest class id. Classes absent
// from training are never predicted.
inline Label predict_row(const LinearModel& model, std::span<const float> x) {
  if (model.constant) return model.constant_class;
  Label best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t c = 0; c < model.num_classes; ++c) {
    if (!model.classes_seen[c]) continue;
    const double score = detail::dot(model.class_weights(c), x) + model.bias[c];
    if (!any || score > best_score) {
      best = static_cast<Label>(c);
      best_score = score;
      any = true;
    }
  }
  return best;
}

inline LabelVector predict(const LinearModel& model, const EmbeddingMatrix& features) {
  if (!model.constant && features.cols() != model.dims) {
    throw InvalidArgument("model expects " + std::to_string(model.dims) + " features, got " +
                          std::to_string(features.cols()));
  }
  std::vector<Label> out(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) out[r] = predict_row(model, features.row(r));
  return {std::move(out), model.num_classes};
}

inline double accuracy(std::span<const Label> predictions, std::span<const Label> gold) {
  if (predictions.size() != gold.size()) throw InvalidArgument("accuracy: length mismatch");
  if (gold.empty()) throw InvalidArgument("accuracy: empty label vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predictions[i] == gold[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

inline double accuracy(const LabelVector& predictions, const LabelVector& gold) {
  return accuracy(predictions.labels, gold.labels);
}

// v(S) = dev accuracy of the classifier trained on train rows S. Holds the
// dataset by reference; the dataset must outlive it.
class DevAccuracyValue {
 public:
  DevAccuracyValue(const Dataset& ds, ClassifierConfig cfg) : ds_(&ds), cfg_(cfg) {
    require_valid(ds);
    cfg_.validate();
    if (ds.dev_labels.size() == 0) throw InvalidArgument("dev set is empty");
  }

  double operator()(std::span<const Index> subset) const {
    const LinearModel model = train_linear(ds_->train_features, ds_->train_labels, subset, cfg_);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ds_->dev_features.rows(); ++r) {
      hits += predict_row(model, ds_->dev_features.row(r)) == ds_->dev_labels[r] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(ds_->dev_labels.size());
  }

  std::size_t size() const noexcept { return ds_->train_size(); }
  const ClassifierConfig& config() const noexcept { return cfg_; }

 private:
  const Dataset* ds_;
  ClassifierConfig cfg_;
};

inline DevAccuracyValue make_dev_accuracy_value_fn(const Dataset& ds, const ClassifierConfig& cfg) {
  return {ds, cfg};
}

}  // namespace tsdshap
