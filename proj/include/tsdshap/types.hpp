#pragma once

// Shared domain types for the valuation engine: feature matrices, label
// vectors, train/dev datasets, sampling configuration and valuation results.
//
// All types are plain values. Once built they are only read, so sharing them
// across worker threads needs no synchronization.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsdshap {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input files.
class LoadError : public Error {
 public:
  using Error::Error;
};

class WriteError : public Error {
 public:
  using Error::Error;
};

// Arguments that violate an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

using Index = std::size_t;
using Label = std::uint32_t;

// n x d row-major feature matrix. Stored as 32-bit floats so that the binary
// file format round-trips bit-exactly; arithmetic is done in double.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0F) {}

  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw InvalidArgument("matrix data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const float> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

  const std::vector<float>& data() const noexcept { return data_; }

  // Rows in the given order.
  EmbeddingMatrix select_rows(std::span<const Index> indices) const {
    EmbeddingMatrix out(indices.size(), cols_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      std::ranges::copy(row(indices[k]), out.row(k).begin());
    }
    return out;
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// Dense class ids 0..num_classes-1.
struct LabelVector {
  std::vector<Label> labels;
  std::size_t num_classes = 0;

  LabelVector() = default;

  // num_classes inferred as max label + 1 (0 when empty).
  explicit LabelVector(std::vector<Label> values) : labels(std::move(values)) {
    num_classes = labels.empty() ? 0 : static_cast<std::size_t>(*std::ranges::max_element(labels)) + 1;
  }

  LabelVector(std::vector<Label> values, std::size_t classes)
      : labels(std::move(values)), num_classes(classes) {}

  std::size_t size() const noexcept { return labels.size(); }
  Label operator[](std::size_t i) const noexcept { return labels[i]; }

  LabelVector select(std::span<const Index> indices) const {
    std::vector<Label> out;
    out.reserve(indices.size());
    for (Index i : indices) out.push_back(labels[i]);
    return {std::move(out), num_classes};
  }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

struct Dataset {
  EmbeddingMatrix train_features;
  LabelVector train_labels;
  EmbeddingMatrix dev_features;
  LabelVector dev_labels;

  std::size_t train_size() const noexcept { return train_labels.size(); }
  std::size_t num_classes() const noexcept {
    return std::max(train_labels.num_classes, dev_labels.num_classes);
  }
};

// Build a dataset whose train and dev label vectors agree on num_classes.
inline Dataset make_dataset(EmbeddingMatrix train_x, LabelVector train_y, EmbeddingMatrix dev_x,
                            LabelVector dev_y) {
  const std::size_t k = std::max(train_y.num_classes, dev_y.num_classes);
  train_y.num_classes = k;
  dev_y.num_classes = k;
  return {std::move(train_x), std::move(train_y), std::move(dev_x), std::move(dev_y)};
}

namespace detail {

inline void check_matrix(const EmbeddingMatrix& m, const std::string& name,
                         std::vector<std::string>& report) {
  if (m.cols() < 1) report.push_back(name + ": zero feature columns");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        report.push_back(name + ": non-finite entry at (" + std::to_string(r) + "," +
                         std::to_string(c) + ")");
      }
    }
  }
}

inline void check_labels(const LabelVector& y, const std::string& name,
                         std::vector<std::string>& report) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= y.num_classes) {
      report.push_back(name + ": label " + std::to_string(y[i]) + " at index " + std::to_string(i) +
                       " not below num_classes " + std::to_string(y.num_classes));
    }
  }
}

}  // namespace detail

// Every invariant violation in the dataset; empty when valid.
inline std::vector<std::string> validate_dataset(const Dataset& ds) {
  std::vector<std::string> report;
  if (ds.train_features.rows() != ds.train_labels.size()) {
    report.push_back("train: row/label count mismatch (" + std::to_string(ds.train_features.rows()) +
                     " rows, " + std::to_string(ds.train_labels.size()) + " labels)");
  }
  if (ds.dev_features.rows() != ds.dev_labels.size()) {
    report.push_back("dev: row/label count mismatch (" + std::to_string(ds.dev_features.rows()) +
                     " rows, " + std::to_string(ds.dev_labels.size()) + " labels)");
  }
  if (ds.train_features.cols() != ds.dev_features.cols()) {
    report.push_back("train/dev feature dimension mismatch (" +
                     std::to_string(ds.train_features.cols()) + " vs " +
                     std::to_string(ds.dev_features.cols()) + ")");
  }
  if (ds.train_labels.num_classes != ds.dev_labels.num_classes) {
    report.push_back("train/dev num_classes mismatch");
  }
  detail::check_matrix(ds.train_features, "train", report);
  detail::check_matrix(ds.dev_features, "dev", report);
  detail::check_labels(ds.train_labels, "train", report);
  detail::check_labels(ds.dev_labels, "dev", report);
  return report;
}

inline void require_valid(const Dataset& ds) {
  auto report = validate_dataset(ds);
  if (report.empty()) return;
  std::string msg = "invalid dataset:";
  for (const auto& r : report) msg += "\n  " + r;
  throw InvalidArgument(msg);
}

// How a chain turns its contribution sums into a per-instance mean.
enum class Normalization {
  iterations,  // divide by T; iterations where i was not sampled count as 0
  inclusions,  // divide by the number of iterations that sampled i
};

struct SamplingConfig {
  std::size_t subset_size = 1;  // upper bound s on |S_t|
  std::size_t iterations = 50;  // T per chain
  std::size_t chains = 1;       // J
  std::uint64_t master_seed = 0;
  Normalization normalization = Normalization::iterations;

  void validate(std::size_t n) const {
    if (subset_size < 1) throw InvalidArgument("subset size must be at least 1");
    if (subset_size > n) {
      throw InvalidArgument("subset size " + std::to_string(subset_size) +
                            " exceeds training set size " + std::to_string(n));
    }
    if (iterations < 1) throw InvalidArgument("iterations must be at least 1");
    if (chains < 1) throw InvalidArgument("chains must be at least 1");
  }
};

enum class Method { ts_dshapley, exact, loo, knn, random };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::ts_dshapley: return "ts_dshapley";
    case Method::exact: return "exact";
    case Method::loo: return "loo";
    case Method::knn: return "knn";
    case Method::random: return "random";
  }
  return "unknown";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : {Method::ts_dshapley, Method::exact, Method::loo, Method::knn, Method::random}) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown valuation method '" + s + "'");
}

// Per-instance value estimates. config_echo is a JSON object serialized by
// the producer; the library never parses it.
struct ValuationResult {
  std::vector<double> values;
  Method method = Method::ts_dshapley;
  std::string config_echo = "{}";
  std::uint64_t seed = 0;
};

// A value function maps a sorted set of training indices to a utility.
// Implementations must be deterministic and callable concurrently.
template <class F>
concept ValueFunction = requires(const F& f, std::span<const Index> subset) {
  { f(subset) } -> std::convertible_to<double>;
};

// Type-erased value function for callers that do not want templates.
using AnyValueFunction = std::function<double(std::span<const Index>)>;

}  // namespace tsdshap
