#pragma once

// Comparison valuations: leave-one-out on the proxy classifier, and the
// closed-form KNN-Shapley recursion.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tsdshap/classifier.hpp"
#include "tsdshap/parallel.hpp"
#include "tsdshap/types.hpp"

namespace tsdshap {

// value_i = v(D) - v(D \ {i}); n + 1 trainings.
template <ValueFunction F>
ValuationResult loo_values(const F& value_fn, std::size_t n, std::size_t threads = 1) {
  if (n < 2) throw InvalidArgument("leave-one-out needs at least 2 instances");
  std::vector<Index> all(n);
  std::iota(all.begin(), all.end(), Index{0});
  const double full = static_cast<double>(value_fn(std::span<const Index>(all)));

  ValuationResult result;
  result.method = Method::loo;
  result.values.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<Index> rest;
    rest.reserve(n - 1);
    for (Index j = 0; j < n; ++j) {
      if (j != i) rest.push_back(j);
    }
    result.values[i] = full - static_cast<double>(value_fn(std::span<const Index>(rest)));
  });
  result.config_echo = R"({"n":)" + std::to_string(n) + "}";
  return result;
}

inline ValuationResult loo_values(const Dataset& ds, const ClassifierConfig& cfg,
                                  std::size_t threads = 1) {
  const DevAccuracyValue value_fn(ds, cfg);
  return loo_values(value_fn, ds.train_size(), threads);
}

namespace detail {

inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    acc += diff * diff;
  }
  return acc;
}

// `candidates` sorted by ascending distance to the dev row; ties by index.
inline std::vector<Index> sort_by_distance(const Dataset& ds, std::vector<Index> candidates,
                                           std::size_t dev_index) {
  const auto target = ds.dev_features.row(dev_index);
  std::vector<double> dist(ds.train_size());
  for (Index i : candidates) dist[i] = squared_distance(ds.train_features.row(i), target);
  std::ranges::sort(candidates, [&](Index a, Index b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  });
  return candidates;
}

}  // namespace detail

// (1/K) * number of label matches among the min(K, |subset|) nearest subset
// members to dev point `dev_index`; 0 for the empty subset.
inline double knn_utility(std::span<const Index> subset, const Dataset& ds, std::size_t k,
                          std::size_t dev_index) {
  if (k < 1) throw InvalidArgument("K must be at least 1");
  if (subset.empty()) return 0.0;
  const auto sorted = detail::sort_by_distance(ds, {subset.begin(), subset.end()}, dev_index);
  const Label target = ds.dev_labels[dev_index];
  const std::size_t top = std::min(k, sorted.size());
  std::size_t hits = 0;
  for (std::size_t j = 0; j < top; ++j) hits += ds.train_labels[sorted[j]] == target ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

// Exact Shapley values under knn_utility for one dev point, O(n log n).
inline std::vector<double> knn_shapley_single(const Dataset& ds, std::size_t k,
                                              std::size_t dev_index) {
  const std::size_t n = ds.train_size();
  std::vector<Index> all(n);
  std::iota(all.begin(), all.end(), Index{0});
  const auto alpha = detail::sort_by_distance(ds, std::move(all), dev_index);
  const Label target = ds.dev_labels[dev_index];
  auto match = [&](std::size_t rank) {
    return ds.train_labels[alpha[rank]] == target ? 1.0 : 0.0;
  };

  std::vector<double> s(n, 0.0);
  if (n == 0) return s;
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  // The farthest point only counts when fewer than K others are present,
  // hence the min(K, N) / K factor; it is 1 whenever N >= K.
  double prev = match(n - 1) / nd * std::min(kd, nd) / kd;
  s[alpha[n - 1]] = prev;
  // Ranks are 1-based in the recursion: rank j here is position j - 1.
  for (std::size_t j = n - 1; j >= 1; --j) {
    const auto jd = static_cast<double>(j);
    prev += (match(j - 1) - match(j)) / kd * std::min(kd, jd) / jd;
    s[alpha[j - 1]] = prev;
  }
  return s;
}

inline ValuationResult knn_shapley_values(const Dataset& ds, std::size_t k, std::size_t threads = 1) {
  if (k < 1) throw InvalidArgument("K must be at least 1");
  if (ds.train_size() < 1) throw InvalidArgument("KNN-Shapley needs at least 1 training instance");
  const std::size_t dev = ds.dev_labels.size();
  if (dev == 0) throw InvalidArgument("KNN-Shapley needs a non-empty dev set");
  require_valid(ds);

  std::vector<std::vector<double>> per_dev(dev);
  parallel_for(dev, threads, [&](std::size_t d) { per_dev[d] = knn_shapley_single(ds, k, d); });

  ValuationResult result;
  result.method = Method::knn;
  result.values.assign(ds.train_size(), 0.0);
  for (const auto& s : per_dev) {
    for (std::size_t i = 0; i < s.size(); ++i) result.values[i] += s[i];
  }
  for (double& v : result.values) v /= static_cast<double>(dev);
  result.config_echo = R"({"knn_k":)" + std::to_string(k) + "}";
  return result;
}

}  // namespace tsdshap
