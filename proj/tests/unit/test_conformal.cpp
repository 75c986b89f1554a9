#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pulsecal/conformal.hpp"
#include "pulsecal/error.hpp"
#include "pulsecal/rng.hpp"
#include "pulsecal/simgen.hpp"

using namespace pulsecal;
using namespace pulsecal::conformal;
using Catch::Approx;

namespace {

// Sort, then take the smallest 1-based index k with k >= (1 - alpha)(n + 1).
std::pair<double, bool> oracle_quantile(std::vector<double> residuals, double alpha) {
  std::sort(residuals.begin(), residuals.end());
  const double target = (1.0 - alpha) * static_cast<double>(residuals.size() + 1);
  std::size_t k = 1;
  while (static_cast<double>(k) < target) {
    ++k;
  }
  if (k > residuals.size()) {
    return {0.0, true};
  }
  return {residuals[k - 1], false};
}

}  // namespace

TEST_CASE("split: chronological counts") {
  CHECK(split_counts(10, 0.7).train == 7);
  CHECK(split_counts(10, 0.7).calibration == 3);
  CHECK(split_counts(100, 0.7).train == 70);
  CHECK(split_counts(100, 0.7).calibration == 30);
  CHECK_THROWS_AS(split_counts(1, 0.7), InvalidInput);
  CHECK_THROWS_AS(split_counts(10, 0.0), InvalidInput);
  CHECK_THROWS_AS(split_counts(10, 1.0), InvalidInput);

  const auto series = ScoreSeries::from_scores("a", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  const auto [train, cal] = split_history(series, 0.7);
  CHECK(train.size() == 7);
  CHECK(cal.size() == 3);
  CHECK(cal.scores.front() == 0.8);
  CHECK(cal.hours.front() == 7.0);
  CHECK(train.agent_id == "a");
}

TEST_CASE("nonconformity: absolute residuals, sorted") {
  const std::vector<double> actual{0.5, 0.7};
  const std::vector<double> forecast{0.4, 0.9};
  const auto cal = nonconformity_scores(actual, forecast);
  REQUIRE(cal.size() == 2);
  CHECK(cal.residuals()[0] == Approx(0.1).margin(1e-15));
  CHECK(cal.residuals()[1] == Approx(0.2).margin(1e-15));
  CHECK(nonconformity_scores(actual, actual).residuals()[1] == 0.0);
  const std::vector<double> one_a{0.5}, one_f{0.6};
  CHECK(nonconformity_scores(one_a, one_f).residuals()[0] == Approx(0.1).margin(1e-15));
  CHECK_THROWS_AS(nonconformity_scores(actual, one_f), InvalidInput);
  CHECK_THROWS_AS(CalibrationSet({0.1, -0.1}), InvalidInput);
}

TEST_CASE("quantile: worked order statistics") {
  std::vector<double> r;
  for (int i = 1; i <= 10; ++i) {
    r.push_back(0.01 * i);
  }
  const CalibrationSet cal(r);
  CHECK(conformal_rank(10, 0.2) == 9);
  const auto q = conformal_quantile(cal, 0.2);
  CHECK_FALSE(q.unbounded);
  CHECK(q.value == Approx(0.09).margin(1e-15));

  const auto single = conformal_quantile(CalibrationSet({0.05}), 0.2);
  CHECK(single.unbounded);

  const CalibrationSet flat(std::vector<double>(20, 0.03));
  for (double alpha : {0.05, 0.1, 0.2, 0.5, 0.9}) {
    CHECK(conformal_quantile(flat, alpha).value == 0.03);
  }
  CHECK_THROWS_AS(conformal_quantile(CalibrationSet{}, 0.2), InvalidInput);
  CHECK_THROWS_AS(conformal_quantile(cal, 0.0), InvalidInput);
  CHECK_THROWS_AS(conformal_quantile(cal, 1.0), InvalidInput);
}

TEST_CASE("quantile: agrees with the sort-and-index oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto n = 1 + rng.index(60);
    std::vector<double> r;
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so ties are common.
      r.push_back(rng.index(4) == 0 ? std::round(rng.uniform() * 10) / 10 : rng.uniform());
    }
    const double alpha = trial % 5 == 0 ? 0.05 * (1 + rng.index(19)) : 0.001 + 0.998 * rng.uniform();
    const auto expected = oracle_quantile(r, alpha);
    const auto got = conformal_quantile(CalibrationSet(r), alpha);
    REQUIRE(got.unbounded == expected.second);
    if (!got.unbounded) {
      REQUIRE(got.value == expected.first);
    }
  }
}

TEST_CASE("quantile: nondecreasing as alpha decreases") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r;
    for (int i = 0; i < 50; ++i) {
      r.push_back(rng.uniform());
    }
    const CalibrationSet cal(r);
    double previous = -1.0;
    for (double alpha = 0.95; alpha > 0.01; alpha -= 0.01) {
      const auto q = conformal_quantile(cal, alpha);
      const double v = q.unbounded ? 2.0 : q.value;
      REQUIRE(v >= previous);
      previous = v;
    }
  }
}

TEST_CASE("conformal interval: worked and degenerate cases") {
  std::vector<double> r;
  for (int i = 1; i <= 10; ++i) {
    r.push_back(0.01 * i);
  }
  const auto iv = conformal_interval(0.5, CalibrationSet(r), 0.2);
  CHECK(iv.lower == Approx(0.41).margin(1e-12));
  CHECK(iv.upper == Approx(0.59).margin(1e-12));
  CHECK(iv.level == Approx(0.8).margin(1e-15));
  CHECK(iv.method == Method::SplitConformal);
  CHECK_FALSE(iv.unbounded);

  const auto zero = conformal_interval(0.3, CalibrationSet(std::vector<double>(10, 0.0)), 0.2);
  CHECK(zero.width() == 0.0);
  CHECK(zero.center == 0.3);

  const auto wide = conformal_interval(0.3, CalibrationSet({0.01}), 0.2);
  CHECK(wide.unbounded);
  CHECK(wide.lower == 0.0);
  CHECK(wide.upper == 1.0);

  const auto edge = conformal_interval(0.97, CalibrationSet(r), 0.2);
  CHECK(edge.upper == 1.0);
  CHECK(edge.lower == Approx(0.88).margin(1e-12));
}

TEST_CASE("horizon residuals: match a direct evaluation") {
  Rng rng(31);
  std::vector<double> s;
  for (int i = 0; i < 200; ++i) {
    s.push_back(0.3 + 0.4 * rng.uniform());
  }
  const forecast::ForecastModel model{0.01, 0.45, 0.02};
  for (std::size_t h : {1u, 5u, 24u}) {
    const auto r = horizon_residuals(s, 10, 200, h, model);
    std::vector<double> expected;
    for (std::size_t j = std::max<std::size_t>(10, h); j < 200; ++j) {
      const double f = s[j - h] + 0.01 * static_cast<double>(h) * (0.45 - s[j - h]);
      expected.push_back(s[j] - f);
    }
    REQUIRE(r.size() == expected.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(r[i] == Approx(expected[i]).margin(1e-14));
    }
    const auto cal = horizon_calibration(s, 10, 200, h, model);
    CHECK(cal.size() == expected.size());
  }
  CHECK_THROWS_AS(horizon_residuals(s, 10, 201, 1, model), InvalidInput);
  CHECK_THROWS_AS(horizon_residuals(s, 10, 100, 0, model), InvalidInput);
}

TEST_CASE("split conformal: marginal coverage on exchangeable residuals") {
  Rng rng(1234);
  const double alpha = 0.2;
  const int trials = 400;
  double coverage_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> residuals;
    for (int i = 0; i < 500; ++i) {
      residuals.push_back(std::abs(0.05 * rng.normal()));
    }
    const CalibrationSet cal(residuals);
    int hits = 0;
    for (int i = 0; i < 200; ++i) {
      const double actual = 0.5 + 0.05 * rng.normal();
      hits += conformal_interval(0.5, cal, alpha).contains(actual) ? 1 : 0;
    }
    coverage_sum += hits / 200.0;
  }
  const double coverage = coverage_sum / trials;
  CHECK(coverage >= 1.0 - alpha - 0.02);
  CHECK(coverage == Approx(1.0 - alpha).margin(0.02));
}

TEST_CASE("coverage report: trivial tables and grouping") {
  std::vector<Interval> full(4, full_range_interval(0.5, 0.8, Method::SplitConformal));
  const std::vector<double> actual{0.1, 0.9, 0.0, 1.0};
  const std::vector<std::string> groups{"b", "a", "b", "a"};
  const auto rows = coverage_report(full, actual, groups);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].group == "b");
  CHECK(rows[1].group == "a");
  CHECK(rows[0].coverage == 1.0);
  CHECK(rows[0].n == 2);
  CHECK(rows[0].mean_width == 1.0);

  std::vector<Interval> points;
  for (double x : {0.2, 0.3, 0.4, 0.5}) {
    points.push_back(make_interval(x, 0.0, 0.8, Method::SplitConformal));
  }
  for (const auto& row : coverage_report(points, actual, groups)) {
    CHECK(row.coverage == 0.0);
    CHECK(row.mean_width == 0.0);
  }
  CHECK(coverage_report({}, {}, {}).empty());
  CHECK_THROWS_AS(coverage_report(points, std::vector<double>{0.1}, groups), InvalidInput);
}

TEST_CASE("intervals always satisfy lower <= center <= upper") {
  Rng rng(6);
  for (int i = 0; i < 5000; ++i) {
    const double c = -0.2 + 1.4 * rng.uniform();
    const auto iv = make_interval(c, 0.5 * rng.uniform(), 0.8, Method::Mondrian);
    REQUIRE(iv.lower <= iv.center);
    REQUIRE(iv.center <= iv.upper);
    REQUIRE(iv.lower >= 0.0);
    REQUIRE(iv.upper <= 1.0);
    const auto d = make_interval(c, 0.5 * rng.uniform(), 0.8, Method::Mondrian, kDifferenceRange);
    REQUIRE(d.lower <= d.center);
    REQUIRE(d.center <= d.upper);
  }
  CHECK_THROWS_AS(make_interval(0.5, -0.1, 0.8, Method::Aci), InvalidInput);
}

TEST_CASE("bootstrap: constant history gives a zero-width interval") {
  const auto flat = ScoreSeries::from_scores("a", std::vector<double>(100, 0.6));
  const auto iv = bootstrap_interval(flat, 24, 200, 0.8, 1);
  CHECK(iv.width() == Approx(0.0).margin(1e-12));
  CHECK(iv.center == Approx(0.6).margin(1e-15));
  CHECK(iv.method == Method::Bootstrap);
  const auto tiny = ScoreSeries::from_scores("a", {0.5, 0.5, 0.5});
  CHECK_THROWS_AS(bootstrap_interval(tiny, 24, 200, 0.8, 1), InvalidInput);
  CHECK_THROWS_AS(bootstrap_interval(flat, 24, 50, 0.8, 1), InvalidInput);
}

TEST_CASE("bootstrap: bands equal the median of per-resample quantiles") {
  const std::vector<double> r{-0.03, -0.01, 0.0, 0.02, 0.05, -0.02, 0.01};
  const std::vector<double> levels{0.8};
  const auto band = bootstrap_residual_bands(r, 300, levels, 9).front();
  CHECK(band.lower_offset <= band.upper_offset);
  CHECK(band.lower_offset >= -0.03);
  CHECK(band.upper_offset <= 0.05);
  const auto again = bootstrap_residual_bands(r, 300, levels, 9).front();
  CHECK(again.lower_offset == band.lower_offset);
  CHECK(again.upper_offset == band.upper_offset);
}

TEST_CASE("bootstrap: stationary coverage near nominal") {
  const double level = 0.8;
  const std::size_t h = 24;
  int hits = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    simgen::StreamSpec spec;
    spec.length = 2000 + h;
    spec.seed = 5000 + t;
    const auto s = simgen::gen_stream(spec);
    ScoreSeries history = s;
    history.scores.resize(2000);
    history.hours.resize(2000);
    const auto iv = bootstrap_interval(history, h, 200, level, t);
    hits += iv.contains(s.scores.back()) ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / trials == Approx(level).margin(0.05));
}

TEST_CASE("bootstrap: undercovers conformal after a volatility increase") {
  const double alpha = 0.2;
  const std::size_t h = 24;
  int boot_hits = 0;
  int conf_hits = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    simgen::StreamSpec spec;
    spec.length = 3000 + h;
    spec.innovation_std = 0.004;
    spec.seed = 9000 + t;
    const auto s = simgen::gen_stream(spec, simgen::ShiftEvent{1000, 0.0, 3.0});
    ScoreSeries history = s;
    history.scores.resize(3000);
    history.hours.resize(3000);
    boot_hits += bootstrap_interval(history, h, 200, 1.0 - alpha, t).contains(s.scores.back());

    const auto counts = split_counts(3000, 0.7);
    const auto model = forecast::estimate_model(history.values().subspan(0, counts.train));
    const auto cal = horizon_calibration(history.values(), counts.train, 3000, h, model);
    const double f = forecast::mean_reversion_forecast(history.scores.back(), model, h);
    conf_hits += conformal_interval(f, cal, alpha).contains(s.scores.back());
  }
  CHECK(boot_hits < conf_hits);
}
