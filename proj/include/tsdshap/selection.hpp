#pragma once

// Data removal on the proxy classifier: drop instances from lowest to
// highest value, retrain after each step, and keep the prefix that gave the
// best dev accuracy.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tsdshap/classifier.hpp"
#include "tsdshap/parallel.hpp"
#include "tsdshap/rng.hpp"
#include "tsdshap/types.hpp"

namespace tsdshap {

struct RemovalCurve {
  std::vector<std::size_t> removed_counts;
  std::vector<double> dev_accuracies;
  std::size_t step = 1;
  std::vector<Index> order;  // ascending value; ties by lower index
};

struct SelectionResult {
  std::size_t optimal_removed = 0;
  std::vector<Index> kept_indices;  // ascending
  double best_dev_accuracy = 0.0;
};

inline std::size_t default_step(std::size_t n) { return std::max<std::size_t>(1, n / 100); }

// Indices sorted by ascending value, lower index first on ties.
inline std::vector<Index> removal_order(std::span<const double> values) {
  std::vector<Index> order(values.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::ranges::stable_sort(order, [&](Index a, Index b) { return values[a] < values[b]; });
  return order;
}

// Training indices left after removing the first `removed` of `order`.
inline std::vector<Index> kept_after(std::span<const Index> order, std::size_t removed) {
  std::vector<Index> kept(order.begin() + static_cast<std::ptrdiff_t>(removed), order.end());
  std::ranges::sort(kept);
  return kept;
}

inline RemovalCurve removal_curve(const ValuationResult& values, const Dataset& ds, std::size_t step,
                                  const ClassifierConfig& cfg, std::size_t threads = 1) {
  const std::size_t n = ds.train_size();
  if (n == 0) throw InvalidArgument("removal curve needs a non-empty training set");
  if (step < 1) throw InvalidArgument("removal step must be at least 1");
  if (values.values.size() != n) {
    throw InvalidArgument("values length " + std::to_string(values.values.size()) +
                          " does not match training set size " + std::to_string(n));
  }
  const DevAccuracyValue value_fn(ds, cfg);

  RemovalCurve curve;
  curve.step = step;
  curve.order = removal_order(values.values);
  for (std::size_t k = 0; k < n; k += step) curve.removed_counts.push_back(k);
  curve.dev_accuracies.resize(curve.removed_counts.size());
  parallel_for(curve.removed_counts.size(), threads, [&](std::size_t p) {
    const auto kept = kept_after(curve.order, curve.removed_counts[p]);
    curve.dev_accuracies[p] = value_fn(kept);
  });
  return curve;
}

// removed_count with the highest accuracy; the smallest count wins ties.
inline std::size_t optimal_removal_index(const RemovalCurve& curve) {
  if (curve.removed_counts.empty()) throw InvalidArgument("empty removal curve");
  std::size_t best = 0;
  for (std::size_t p = 1; p < curve.dev_accuracies.size(); ++p) {
    if (curve.dev_accuracies[p] > curve.dev_accuracies[best]) best = p;
  }
  return curve.removed_counts[best];
}

inline SelectionResult select_from_curve(const RemovalCurve& curve) {
  SelectionResult result;
  result.optimal_removed = optimal_removal_index(curve);
  result.kept_indices = kept_after(curve.order, result.optimal_removed);
  const auto pos = static_cast<std::size_t>(
      std::ranges::find(curve.removed_counts, result.optimal_removed) - curve.removed_counts.begin());
  result.best_dev_accuracy = curve.dev_accuracies[pos];
  return result;
}

inline SelectionResult select_subset(const ValuationResult& values, const Dataset& ds,
                                     std::size_t step, const ClassifierConfig& cfg,
                                     std::size_t threads = 1) {
  return select_from_curve(removal_curve(values, ds, step, cfg, threads));
}

// Remove k_remove indices uniformly at random; returns the kept ones ascending.
inline std::vector<Index> random_removal(std::size_t n, std::size_t k_remove, std::uint64_t seed) {
  if (k_remove >= n) {
    throw InvalidArgument("cannot remove " + std::to_string(k_remove) + " of " + std::to_string(n) +
                          " instances");
  }
  std::vector<Index> pool(n);
  std::iota(pool.begin(), pool.end(), Index{0});
  Rng rng(mix_seed(seed, 0x72616E646F6DULL));
  rng.partial_shuffle(std::span<Index>(pool), k_remove);
  return kept_after(pool, k_remove);
}

// CSV with header "removed_count,dev_accuracy", accuracies to 6 decimals.
inline std::string format_curve_csv(const RemovalCurve& curve) {
  std::string out = "removed_count,dev_accuracy\n";
  char buf[64];
  for (std::size_t p = 0; p < curve.removed_counts.size(); ++p) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", curve.removed_counts[p], curve.dev_accuracies[p]);
    out += buf;
  }
  return out;
}

}  // namespace tsdshap
