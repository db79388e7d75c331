#pragma once

// Percentile bootstrap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "kfr/core.hpp"

namespace kfr {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

struct BootstrapConfig {
  int iterations = 1000;
  double level = 0.99;
  std::uint64_t seed = 0;
};

/// Linear-interpolated quantile of sorted values, q in [0, 1].
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline double mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean of empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

/// Percentile bootstrap interval for `statistic` over `items`.
///
/// `statistic` receives a resample drawn with replacement, the same size as
/// `items`. Resamples where it returns a non-finite value are dropped; if
/// none survive, a DomainError is thrown.
template <typename T, typename Statistic>
Interval bootstrap_ci(Statistic&& statistic, std::span<const T> items, int iterations, double level, Rng& rng) {
  if (iterations < 100) throw DomainError("bootstrap needs at least 100 iterations");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  if (items.size() < 2) throw DomainError("bootstrap needs at least 2 items");

  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(iterations));
  std::vector<T> resample(items.size());
  for (int it = 0; it < iterations; ++it) {
    for (auto& slot : resample) slot = items[rng.index(items.size())];
    const double v = statistic(std::span<const T>(resample));
    if (std::isfinite(v)) stats.push_back(v);
  }
  if (stats.empty()) throw DomainError("bootstrap statistic undefined on every resample");
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

/// Bootstrap interval of the mean of `values`.
inline Interval bootstrap_mean_ci(std::span<const double> values, const BootstrapConfig& cfg, std::uint64_t stream = 0) {
  Rng rng(derive_seed(cfg.seed, stream));
  return bootstrap_ci<double>([](std::span<const double> xs) { return mean(xs); }, values, cfg.iterations, cfg.level, rng);
}

}  // namespace kfr
