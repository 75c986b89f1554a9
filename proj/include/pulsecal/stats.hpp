#pragma once

#include <span>
#include <vector>

// Small descriptive statistics shared across modules.
namespace pulsecal::stats {

double mean(std::span<const double> xs);
// Divide-by-n standard deviation.
double population_std(std::span<const double> xs);
// Divide-by-(n-1) standard deviation; zero for fewer than two values.
double sample_std(std::span<const double> xs);
// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
double quantile(std::vector<double> xs, double p);
// Same, for data already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);
double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace pulsecal::stats
