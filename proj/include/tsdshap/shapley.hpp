#pragma once

// Shapley values of training instances: exact enumeration for tiny games and
// the multi-chain subset-sampling estimator for real training sets.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsdshap/parallel.hpp"
#include "tsdshap/rng.hpp"
#include "tsdshap/types.hpp"

namespace tsdshap {

inline constexpr std::size_t kExactShapleyMaxPlayers = 20;

namespace detail {

inline std::vector<Index> mask_members(std::uint32_t mask) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(std::popcount(mask)));
  for (std::uint32_t rest = mask; rest != 0; rest &= rest - 1) {
    out.push_back(static_cast<Index>(std::countr_zero(rest)));
  }
  return out;
}

inline std::string sampling_echo(const SamplingConfig& cfg) {
  return R"({"subset_size":)" + std::to_string(cfg.subset_size) +
         R"(,"iterations":)" + std::to_string(cfg.iterations) +
         R"(,"chains":)" + std::to_string(cfg.chains) + R"(,"normalization":")" +
         (cfg.normalization == Normalization::iterations ? "iterations" : "inclusions") + "\"}";
}

}  // namespace detail

// v(S) for every S over n players, indexed by bitmask. Each distinct subset
// is evaluated exactly once.
template <ValueFunction F>
std::vector<double> enumerate_game(const F& value_fn, std::size_t n, std::size_t threads = 1) {
  if (n > kExactShapleyMaxPlayers) {
    throw InvalidArgument("exact Shapley enumeration is limited to " +
                          std::to_string(kExactShapleyMaxPlayers) + " instances, got " +
                          std::to_string(n));
  }
  const std::size_t count = std::size_t{1} << n;
  std::vector<double> table(count);
  parallel_for(count, threads, [&](std::size_t mask) {
    const auto members = detail::mask_members(static_cast<std::uint32_t>(mask));
    table[mask] = static_cast<double>(value_fn(std::span<const Index>(members)));
  });
  return table;
}

// phi_i = sum over S containing i of (v(S) - v(S \ {i})) / (n * C(n-1, |S|-1)),
// from a full table of subset values.
inline std::vector<double> shapley_from_table(std::span<const double> table, std::size_t n) {
  // weight[k] = k! (n-1-k)! / n!, built as 1 / (n * C(n-1, k)).
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    weight[k] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - k) / static_cast<double>(k + 1);
  }
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double acc = 0.0;
    for (std::size_t mask = 0; mask < table.size(); ++mask) {
      if (!(mask & bit)) continue;
      const auto others = static_cast<std::size_t>(std::popcount(mask)) - 1;
      acc += weight[others] * (table[mask] - table[mask ^ bit]);
    }
    phi[i] = acc;
  }
  return phi;
}

template <ValueFunction F>
ValuationResult exact_shapley(const F& value_fn, std::size_t n, std::size_t threads = 1) {
  const auto table = enumerate_game(value_fn, n, threads);
  ValuationResult result;
  result.method = Method::exact;
  result.values = shapley_from_table(table, n);
  result.config_echo = R"({"n":)" + std::to_string(n) + "}";
  return result;
}

struct ChainResult {
  std::size_t chain_index = 0;
  std::vector<double> mean_contributions;
  std::vector<std::size_t> inclusion_counts;
};

// Seed of chain `chain_index` under `master_seed`.
constexpr std::uint64_t chain_seed(std::uint64_t master_seed, std::size_t chain_index) noexcept {
  return mix_seed(master_seed, chain_index);
}

// One sampling chain. Each of the T iterations draws |S_t| uniformly from
// [ceil(s/2), s], draws S_t uniformly without replacement (as a random
// ordered sample), then removes the members in that order down to the empty
// set. The instance removed from R gets v(R) - v(R \ {i}); instances outside
// S_t get 0 for that iteration.
template <ValueFunction F>
ChainResult run_chain(const F& value_fn, std::size_t n, const SamplingConfig& cfg,
                      std::size_t chain_index) {
  cfg.validate(n);
  Rng rng(chain_seed(cfg.master_seed, chain_index));
  const std::size_t lo = (cfg.subset_size + 1) / 2;
  const std::size_t hi = cfg.subset_size;

  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);
  std::vector<Index> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<Index> remaining;

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const auto size = static_cast<std::size_t>(rng.between(lo, hi));
    rng.partial_shuffle(std::span<Index>(pool), size);
    const std::span<const Index> order(pool.data(), size);

    remaining.assign(order.begin(), order.end());
    std::ranges::sort(remaining);
    double current = static_cast<double>(value_fn(std::span<const Index>(remaining)));
    for (Index victim : order) {
      remaining.erase(std::ranges::lower_bound(remaining, victim));
      const double after = static_cast<double>(value_fn(std::span<const Index>(remaining)));
      sums[victim] += current - after;
      ++counts[victim];
      current = after;
    }
  }

  ChainResult result;
  result.chain_index = chain_index;
  result.inclusion_counts = std::move(counts);
  result.mean_contributions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.normalization == Normalization::iterations) {
      result.mean_contributions[i] = sums[i] / static_cast<double>(cfg.iterations);
    } else {
      const auto c = result.inclusion_counts[i];
      result.mean_contributions[i] = c == 0 ? 0.0 : sums[i] / static_cast<double>(c);
    }
  }
  return result;
}

// phi_i = (1/J) sum_c mean_contributions_c[i]. Chains run on up to `threads`
// workers and are summed in chain order, so the result does not depend on
// the thread count.
template <ValueFunction F>
ValuationResult estimate_values(const F& value_fn, std::size_t n, const SamplingConfig& cfg,
                                std::size_t threads = 1) {
  cfg.validate(n);
  std::vector<ChainResult> chains(cfg.chains);
  parallel_for(cfg.chains, threads,
               [&](std::size_t c) { chains[c] = run_chain(value_fn, n, cfg, c); });

  ValuationResult result;
  result.method = Method::ts_dshapley;
  result.seed = cfg.master_seed;
  result.config_echo = detail::sampling_echo(cfg);
  result.values.assign(n, 0.0);
  for (const auto& chain : chains) {
    for (std::size_t i = 0; i < n; ++i) result.values[i] += chain.mean_contributions[i];
  }
  for (double& v : result.values) v /= static_cast<double>(cfg.chains);
  return result;
}

}  // namespace tsdshap
