#include "pulsecal/stats.hpp"

#include <algorithm>
#include <cmath>

#include "pulsecal/error.hpp"

namespace pulsecal::stats {

double mean(std::span<const double> xs) {
  require(!xs.empty(), "mean of an empty sample");
  double sum = 0.0;
  for (double x : xs) {
    sum += x;
  }
  return sum / static_cast<double>(xs.size());
}

namespace {

// Deviations are taken after shifting by the first element, so identical
// values give exactly zero and adding a constant changes nothing but rounding.
double sum_squared_deviation(std::span<const double> xs) {
  require(!xs.empty(), "spread of an empty sample");
  const double origin = xs.front();
  double shifted_sum = 0.0;
  for (double x : xs) {
    shifted_sum += x - origin;
  }
  const double m = shifted_sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) {
    const double d = (x - origin) - m;
    ss += d * d;
  }
  return ss;
}

}  // namespace

double population_std(std::span<const double> xs) {
  return std::sqrt(sum_squared_deviation(xs) / static_cast<double>(xs.size()));
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) {
    return 0.0;
  }
  return std::sqrt(sum_squared_deviation(xs) / static_cast<double>(xs.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile probability outside [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, p);
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "correlation needs two aligned samples");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    return 0.0;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace pulsecal::stats
