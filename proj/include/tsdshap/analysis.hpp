#pragma once

// Hyperparameter-sweep statistics and a synthetic noisy-label benchmark.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsdshap/io.hpp"
#include "tsdshap/rng.hpp"
#include "tsdshap/types.hpp"

namespace tsdshap {

// Thrown when a series is constant and the correlation is undefined.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

// Sample Pearson coefficient. The centered cross products are accumulated in
// a symmetric form, so pearson(x, y) == pearson(y, x) bit for bit.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("pearson: length mismatch");
  if (x.size() < 2) throw InvalidArgument("pearson: need at least 2 points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("pearson: constant series");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

// Ranks starting at 1, ties get the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation (Pearson on average ranks).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

struct SweepRecord {
  double subset_size_pct = 0.0;
  std::size_t chains = 0;
  double performance = 0.0;
  std::size_t trial = 0;
};

enum class SweepAxis { chains, subset_size };

struct CorrelationRow {
  double level = 0.0;                // value of the fixed parameter
  std::optional<double> correlation;  // empty when undefined
};

// For each level of the fixed parameter, Pearson between the varied
// parameter and the trial-mean performance at each of its values.
inline std::vector<CorrelationRow> sweep_correlations(std::span<const SweepRecord> records,
                                                      SweepAxis vary) {
  // level -> varied value -> (sum, count)
  std::map<double, std::map<double, std::pair<double, std::size_t>>> groups;
  for (const auto& r : records) {
    if (!(r.performance >= 0.0 && r.performance <= 1.0)) {
      throw InvalidArgument("sweep record performance outside [0,1]");
    }
    const double chains = static_cast<double>(r.chains);
    const double level = vary == SweepAxis::chains ? r.subset_size_pct : chains;
    const double varied = vary == SweepAxis::chains ? chains : r.subset_size_pct;
    auto& cell = groups[level][varied];
    cell.first += r.performance;
    cell.second += 1;
  }
  std::vector<CorrelationRow> rows;
  for (const auto& [level, cells] : groups) {
    CorrelationRow row{level, std::nullopt};
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [varied, acc] : cells) {
      xs.push_back(varied);
      ys.push_back(acc.first / static_cast<double>(acc.second));
    }
    if (xs.size() >= 2) {
      try {
        row.correlation = pearson(xs, ys);
      } catch (const UndefinedCorrelation&) {
      }
    }
    rows.push_back(row);
  }
  return rows;
}

namespace detail {

inline std::string format_level(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string format_corr(const std::optional<double>& c) {
  if (!c) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *c);
  return buf;
}

}  // namespace detail

inline std::string format_correlations_csv(std::span<const CorrelationRow> rows, SweepAxis vary) {
  std::string out = vary == SweepAxis::chains ? "subset_size_pct,correlation\n" : "chains,correlation\n";
  for (const auto& r : rows) out += detail::format_level(r.level) + "," + detail::format_corr(r.correlation) + "\n";
  return out;
}

// Levels across the top, one row of coefficients beneath.
inline std::string format_correlations_table(std::span<const CorrelationRow> rows, SweepAxis vary,
                                             std::string_view label = "correlation") {
  const std::string title = vary == SweepAxis::chains
                                ? "Correlation between number of chains and performance, per subset size (%)"
                                : "Correlation between subset size and performance, per number of chains";
  std::string header = std::string(vary == SweepAxis::chains ? "subset size (%)" : "chains");
  std::string values(label);
  std::size_t width = std::max(header.size(), values.size());
  header.resize(width, ' ');
  values.resize(width, ' ');
  for (const auto& r : rows) {
    const auto lv = detail::format_level(r.level);
    const auto cv = detail::format_corr(r.correlation);
    const std::size_t w = std::max(lv.size(), cv.size()) + 2;
    header += std::string(w - lv.size(), ' ') + lv;
    values += std::string(w - cv.size(), ' ') + cv;
  }
  return title + "\n" + header + "\n" + values + "\n";
}

inline std::vector<SweepRecord> parse_sweep_csv(std::string_view text) {
  const auto lines = io::detail::split_lines(text);
  if (lines.empty() || io::detail::trim(lines[0]) != "subset_size_pct,chains,performance,trial") {
    throw LoadError("sweep CSV must start with header 'subset_size_pct,chains,performance,trial'");
  }
  std::vector<SweepRecord> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto line = io::detail::trim(lines[ln]);
    if (line.empty()) continue;
    SweepRecord r;
    std::string s(line);
    char tail = 0;
    unsigned long long chains = 0;
    unsigned long long trial = 0;
    if (std::sscanf(s.c_str(), "%lf,%llu,%lf,%llu%c", &r.subset_size_pct, &chains, &r.performance,
                    &trial, &tail) != 4) {
      throw LoadError("sweep CSV line " + std::to_string(ln + 1) + ": malformed record");
    }
    r.chains = chains;
    r.trial = trial;
    out.push_back(r);
  }
  return out;
}

inline std::string format_sweep_csv(std::span<const SweepRecord> records) {
  std::string out = "subset_size_pct,chains,performance,trial\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%g,%zu,%.6f,%zu\n", r.subset_size_pct, r.chains, r.performance, r.trial);
    out += buf;
  }
  return out;
}

struct BenchmarkConfig {
  std::size_t n = 500;   // training instances
  std::size_t dims = 32;
  double flip_fraction = 0.1;
  double separation = 3.0;  // distance between class means, in units of sigma
  std::size_t dev_size = 0;  // 0 -> n / 4, an 80/20 train/dev split
  std::uint64_t seed = 0;
};

struct NoisyBenchmark {
  Dataset dataset;
  std::vector<Index> flipped;  // ascending
};

// Two unit-variance Gaussian classes with means at +/- (separation / 2) along
// the diagonal direction. Labels alternate 0,1,0,1,... so classes are
// balanced; floor(flip_fraction * n) training labels are flipped, dev labels
// are clean.
inline NoisyBenchmark generate_noisy_benchmark(const BenchmarkConfig& cfg) {
  if (!(cfg.flip_fraction >= 0.0 && cfg.flip_fraction < 0.5)) {
    throw InvalidArgument("flip fraction must lie in [0, 0.5)");
  }
  if (cfg.dims < 1) throw InvalidArgument("benchmark needs at least 1 dimension");
  if (cfg.n < 1) throw InvalidArgument("benchmark needs at least 1 training instance");
  const std::size_t dev = cfg.dev_size == 0 ? std::max<std::size_t>(1, cfg.n / 4) : cfg.dev_size;
  Rng rng(mix_seed(cfg.seed, 0x62656E6368ULL));
  const double offset = cfg.separation / 2.0 / std::sqrt(static_cast<double>(cfg.dims));

  auto draw = [&](std::size_t rows, std::vector<Label>& labels) {
    EmbeddingMatrix x(rows, cfg.dims);
    labels.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      labels[r] = static_cast<Label>(r % 2);
      const double sign = labels[r] == 1 ? 1.0 : -1.0;
      for (std::size_t c = 0; c < cfg.dims; ++c) {
        x(r, c) = static_cast<float>(sign * offset + rng.normal());
      }
    }
    return x;
  };
  std::vector<Label> train_y;
  std::vector<Label> dev_y;
  auto train_x = draw(cfg.n, train_y);
  auto dev_x = draw(dev, dev_y);

  const auto flips = static_cast<std::size_t>(std::floor(cfg.flip_fraction * static_cast<double>(cfg.n)));
  std::vector<Index> pool(cfg.n);
  std::iota(pool.begin(), pool.end(), Index{0});
  rng.partial_shuffle(std::span<Index>(pool), flips);
  std::vector<Index> flipped(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(flips));
  std::ranges::sort(flipped);
  for (Index i : flipped) train_y[i] = 1 - train_y[i];

  NoisyBenchmark out;
  out.dataset = make_dataset(std::move(train_x), LabelVector(std::move(train_y), 2), std::move(dev_x),
                             LabelVector(std::move(dev_y), 2));
  out.flipped = std::move(flipped);
  return out;
}

}  // namespace tsdshap
