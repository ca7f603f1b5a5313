#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tsdshap/analysis.hpp"
#include "tsdshap/classifier.hpp"
#include "tsdshap/selection.hpp"
#include "tsdshap/shapley.hpp"

namespace tsdshap {
namespace {

struct AdditiveGame {
  std::vector<double> w;
  double operator()(std::span<const Index> s) const {
    double acc = 0.0;
    for (Index i : s) acc += w[i];
    return acc;
  }
};

struct CardinalityGame {
  double operator()(std::span<const Index> s) const { return static_cast<double>(s.size()); }
};

struct ConstantGame {
  double operator()(std::span<const Index>) const { return 0.7; }
};

// Arbitrary game given by a table over bitmasks.
struct TableGame {
  std::vector<double> table;
  double operator()(std::span<const Index> s) const {
    std::size_t mask = 0;
    for (Index i : s) mask |= std::size_t{1} << i;
    return table[mask];
  }
};

Dataset small_dataset(std::size_t n, std::uint64_t seed) {
  BenchmarkConfig cfg;
  cfg.n = n;
  cfg.dims = 2;
  cfg.flip_fraction = 1.0 / static_cast<double>(n) + 1e-9;
  cfg.separation = 3.0;
  cfg.dev_size = 30;
  cfg.seed = seed;
  return generate_noisy_benchmark(cfg).dataset;
}

TEST(ExactShapley, AdditiveGameRecoversWeights) {
  const AdditiveGame game{{0.5, 0.3, 0.2}};
  const auto r = exact_shapley(game, 3);
  EXPECT_EQ(r.method, Method::exact);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.values[i], game.w[i], 1e-12);
}

TEST(ExactShapley, SymmetricGame) {
  const auto r = exact_shapley(CardinalityGame{}, 3);
  for (double v : r.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ExactShapley, MatchesPermutationOracleOnDevAccuracy) {
  const auto ds = small_dataset(6, 3);
  const DevAccuracyValue v(ds, {});
  const auto expected = testing::permutation_shapley(v, 6);
  const auto r = exact_shapley(v, 6);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r.values[i], expected[i], 1e-9);
}

TEST(ExactShapley, ThreadCountDoesNotChangeValues) {
  const auto ds = small_dataset(6, 4);
  const DevAccuracyValue v(ds, {});
  EXPECT_EQ(exact_shapley(v, 6, 1).values, exact_shapley(v, 6, 3).values);
}

TEST(ExactShapley, GuardRejectsLargeN) {
  EXPECT_THROW(exact_shapley(CardinalityGame{}, 21), InvalidArgument);
}

TEST(ExactShapley, EvaluatesEachSubsetOnce) {
  std::vector<int> calls(1 << 5, 0);
  auto counting = [&](std::span<const Index> s) {
    std::size_t mask = 0;
    for (Index i : s) mask |= std::size_t{1} << i;
    ++calls[mask];
    return static_cast<double>(s.size());
  };
  exact_shapley(counting, 5);
  for (int c : calls) EXPECT_EQ(c, 1);
}

TEST(ExactShapley, AxiomsOnRandomGames) {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.below(4));
    const std::size_t null_player = 0;
    const std::size_t a = 1;
    const std::size_t b = 2;
    std::vector<double> base(std::size_t{1} << n);
    for (double& x : base) x = rng.uniform();
    // Symmetrize over (a, b) and make null_player irrelevant.
    TableGame game{std::vector<double>(base.size())};
    const std::size_t swap_bits = (std::size_t{1} << a) | (std::size_t{1} << b);
    for (std::size_t mask = 0; mask < base.size(); ++mask) {
      std::size_t m = mask & ~(std::size_t{1} << null_player);
      std::size_t swapped = m;
      if (std::popcount(m & swap_bits) == 1) swapped = m ^ swap_bits;
      game.table[mask] = base[m] + base[swapped];
    }
    const auto phi = exact_shapley(game, n).values;
    const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
    EXPECT_NEAR(total, game.table.back() - game.table.front(), 1e-9);
    EXPECT_NEAR(phi[a], phi[b], 1e-9);
    EXPECT_NEAR(phi[null_player], 0.0, 1e-9);
  }
}

TEST(ExactShapley, RankingInvariantUnderAffineScaling) {
  Rng rng(5);
  TableGame game{std::vector<double>(1 << 5)};
  for (double& x : game.table) x = rng.uniform();
  TableGame scaled = game;
  for (double& x : scaled.table) x = 3.5 * x + 2.0;
  EXPECT_EQ(removal_order(exact_shapley(game, 5).values), removal_order(exact_shapley(scaled, 5).values));
}

SamplingConfig sampling(std::size_t s, std::size_t t, std::size_t j, std::uint64_t seed) {
  SamplingConfig cfg;
  cfg.subset_size = s;
  cfg.iterations = t;
  cfg.chains = j;
  cfg.master_seed = seed;
  return cfg;
}

TEST(RunChain, AdditiveGameContributionsAreScaledWeights) {
  const AdditiveGame game{{0.4, 0.1, 0.25, 0.05, 0.2}};
  const auto chain = run_chain(game, 5, sampling(4, 200, 1, 17), 0);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_LE(chain.inclusion_counts[i], 200U);
    EXPECT_NEAR(chain.mean_contributions[i],
                game.w[i] * static_cast<double>(chain.inclusion_counts[i]) / 200.0, 1e-12);
  }
}

TEST(RunChain, SingleInstance) {
  auto v = [](std::span<const Index> s) { return s.empty() ? 0.25 : 0.75; };
  const auto chain = run_chain(v, 1, sampling(1, 10, 1, 3), 0);
  EXPECT_EQ(chain.inclusion_counts[0], 10U);
  EXPECT_DOUBLE_EQ(chain.mean_contributions[0], 0.5);
}

TEST(RunChain, ConstantGameGivesZero) {
  const auto chain = run_chain(ConstantGame{}, 6, sampling(5, 30, 1, 8), 2);
  for (double c : chain.mean_contributions) EXPECT_EQ(c, 0.0);
}

TEST(RunChain, SubsetSizesStayInRange) {
  std::vector<std::size_t> sizes;
  auto recording = [&](std::span<const Index> s) {
    sizes.push_back(s.size());
    return 0.0;
  };
  run_chain(recording, 20, sampling(9, 100, 1, 4), 0);
  // The first evaluation of every iteration is v(S_t); the next |S_t| walk down to empty.
  std::size_t pos = 0;
  std::size_t iterations = 0;
  while (pos < sizes.size()) {
    const std::size_t top = sizes[pos];
    EXPECT_GE(top, 5U);
    EXPECT_LE(top, 9U);
    for (std::size_t k = 0; k <= top; ++k) EXPECT_EQ(sizes[pos + k], top - k);
    pos += top + 1;
    ++iterations;
  }
  EXPECT_EQ(iterations, 100U);
}

TEST(RunChain, RejectsSubsetLargerThanN) {
  EXPECT_THROW(run_chain(ConstantGame{}, 3, sampling(4, 1, 1, 0), 0), InvalidArgument);
}

TEST(RunChain, ReproducibleInIsolation) {
  const AdditiveGame game{{0.1, 0.9, 0.3, 0.4}};
  const auto a = run_chain(game, 4, sampling(3, 50, 1, 5), 7);
  const auto b = run_chain(game, 4, sampling(3, 50, 1, 5), 7);
  const auto other = run_chain(game, 4, sampling(3, 50, 1, 5), 8);
  EXPECT_EQ(a.mean_contributions, b.mean_contributions);
  EXPECT_EQ(a.inclusion_counts, b.inclusion_counts);
  EXPECT_NE(a.inclusion_counts, other.inclusion_counts);
}

TEST(RunChain, InclusionNormalizationRecoversAdditiveWeights) {
  const AdditiveGame game{{0.4, 0.1, 0.3}};
  auto cfg = sampling(2, 100, 1, 1);
  cfg.normalization = Normalization::inclusions;
  const auto chain = run_chain(game, 3, cfg, 0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(chain.mean_contributions[i], game.w[i], 1e-12);
}

TEST(EstimateValues, SingleChainEqualsChainMean) {
  const AdditiveGame game{{0.2, 0.5, 0.3}};
  const auto cfg = sampling(2, 40, 1, 10);
  const auto r = estimate_values(game, 3, cfg);
  EXPECT_EQ(r.values, run_chain(game, 3, cfg, 0).mean_contributions);
  EXPECT_EQ(r.seed, 10U);
  EXPECT_EQ(r.method, Method::ts_dshapley);
}

TEST(EstimateValues, AveragesChainsInOrder) {
  const AdditiveGame game{{0.2, 0.5, 0.3, 0.7}};
  const auto cfg = sampling(3, 20, 3, 2);
  const auto r = estimate_values(game, 4, cfg);
  for (std::size_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) sum += run_chain(game, 4, cfg, c).mean_contributions[i];
    EXPECT_EQ(r.values[i], sum / 3.0);
  }
}

TEST(EstimateValues, AdditiveCalibration) {
  const AdditiveGame game{{0.4, 0.1}};
  const auto r = estimate_values(game, 2, sampling(2, 5000, 4, 2024));
  const double rate = testing::expected_inclusion_rate(2, 2);  // 0.75
  EXPECT_NEAR(r.values[0], 0.4 * rate, 0.02);
  EXPECT_NEAR(r.values[1], 0.1 * rate, 0.02);
  EXPECT_GT(r.values[0], r.values[1]);
}

TEST(EstimateValues, IndependentOfThreadCount) {
  const auto ds = small_dataset(12, 6);
  const DevAccuracyValue v(ds, {});
  const auto cfg = sampling(8, 10, 5, 77);
  const auto one = estimate_values(v, 12, cfg, 1);
  EXPECT_EQ(one.values, estimate_values(v, 12, cfg, 4).values);
  EXPECT_EQ(one.values, estimate_values(v, 12, cfg, 8).values);
}

TEST(EstimateValues, RankAgreesWithExactOnSmallDataset) {
  const auto ds = small_dataset(8, 1);
  const DevAccuracyValue v(ds, {});
  const auto exact = exact_shapley(v, 8);
  const auto est = estimate_values(v, 8, sampling(8, 3000, 4, 1));
  EXPECT_GE(spearman(exact.values, est.values), 0.9);
}

TEST(ChainSeed, DistinctAcrossChainsAndMasters) {
  EXPECT_NE(chain_seed(0, 0), chain_seed(0, 1));
  EXPECT_NE(chain_seed(0, 1), chain_seed(1, 0));
  EXPECT_EQ(chain_seed(42, 3), chain_seed(42, 3));
}

}  // namespace
}  // namespace tsdshap
