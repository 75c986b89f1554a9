#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pulsecal/error.hpp"
#include "pulsecal/pipeline.hpp"
#include "pulsecal/rng.hpp"

using namespace pulsecal;
using namespace pulsecal::pipeline;
using Catch::Approx;

namespace {

std::vector<StageUncertainty> stages(std::vector<double> sigmas) {
  std::vector<StageUncertainty> out;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    out.push_back({"s" + std::to_string(i), sigmas[i]});
  }
  return out;
}

}  // namespace

TEST_CASE("bounds: worked values") {
  const auto two = stages({0.031, 0.065});
  CHECK(std::round(independence_bound(two) * 1000) / 1000 == Approx(0.072).margin(1e-12));
  CHECK(std::round(worst_case_bound(two) * 1000) / 1000 == Approx(0.096).margin(1e-12));
  CHECK(independence_bound(two) == Approx(std::sqrt(0.031 * 0.031 + 0.065 * 0.065)).margin(1e-15));
  CHECK(independence_bound(stages({0.0, 0.2})) == Approx(0.2).margin(1e-15));
  CHECK(independence_bound(stages({0.03, 0.03, 0.04})) == Approx(std::sqrt(0.0034)).margin(1e-15));
  CHECK(independence_bound(stages({0.03, 0.03, 0.04})) == Approx(0.0583).margin(5e-5));
  CHECK(worst_case_bound(stages({0.0, 0.0})) == 0.0);
  CHECK(worst_case_bound(stages({0.01, 0.02, 0.03})) == Approx(0.06).margin(1e-15));
  CHECK_THROWS_AS(independence_bound(stages({0.1})), InvalidInput);
  CHECK_THROWS_AS(worst_case_bound(stages({0.1})), InvalidInput);
  CHECK_THROWS_AS(worst_case_bound(stages({0.1, -0.1})), InvalidInput);
}

TEST_CASE("bounds: ordering, equality case and permutation symmetry") {
  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto k = 2 + rng.index(5);
    std::vector<double> sigmas;
    for (std::size_t i = 0; i < k; ++i) {
      sigmas.push_back(rng.index(3) == 0 ? 0.0 : rng.uniform());
    }
    const double ind = independence_bound(stages(sigmas));
    const double worst = worst_case_bound(stages(sigmas));
    REQUIRE(ind <= worst + 1e-15);
    std::size_t nonzero = 0;
    for (double s : sigmas) {
      nonzero += s > 0.0 ? 1 : 0;
    }
    if (nonzero <= 1) {
      REQUIRE(ind == Approx(worst).margin(1e-15));
    } else {
      REQUIRE(ind < worst);
    }
    std::vector<double> reversed(sigmas.rbegin(), sigmas.rend());
    REQUIRE(independence_bound(stages(reversed)) == Approx(ind).margin(1e-15));
    REQUIRE(worst_case_bound(stages(reversed)) == Approx(worst).margin(1e-15));
  }
}

TEST_CASE("simulation: additive sigma converges to the closed form") {
  for (double rho : {-1.0, -0.5, 0.0, 0.3, 0.9, 1.0}) {
    PipelineSimConfig c;
    c.sigma_first = 0.031;
    c.sigma_second = 0.065;
    c.rho = rho;
    c.samples = 100000;
    c.seed = 42;
    const double empirical = simulate_pipeline_sigma(c);
    const double exact = additive_sigma(0.031, 0.065, rho);
    CHECK(empirical == Approx(exact).epsilon(0.03));
  }
  PipelineSimConfig one_zero;
  one_zero.sigma_first = 0.0;
  one_zero.sigma_second = 0.05;
  one_zero.seed = 1;
  CHECK(simulate_pipeline_sigma(one_zero) == Approx(0.05).epsilon(0.02));
}

TEST_CASE("simulation: multiplicative rule and validation") {
  PipelineSimConfig c;
  c.sigma_first = 0.031;
  c.sigma_second = 0.065;
  c.rule = Composition::Multiplicative;
  c.rho = 0.5;
  c.seed = 3;
  // (1+a)(1+b)-1 = a + b + ab; the product term adds a little variance.
  const double s = simulate_pipeline_sigma(c);
  CHECK(s == Approx(additive_sigma(0.031, 0.065, 0.5)).epsilon(0.03));
  c.rho = 1.5;
  CHECK_THROWS_AS(simulate_pipeline_sigma(c), InvalidInput);
  c.rho = 0.0;
  c.samples = 1;
  CHECK_THROWS_AS(simulate_pipeline_sigma(c), InvalidInput);
  CHECK(parse_composition("additive") == Composition::Additive);
  CHECK(parse_composition("multiplicative") == Composition::Multiplicative);
  CHECK(to_string(Composition::Multiplicative) == "multiplicative");
  CHECK_THROWS_AS(parse_composition("sum"), InvalidInput);
}

TEST_CASE("sweep: bounds bracket the additive sigma for nonnegative rho") {
  std::vector<double> grid;
  for (int i = -5; i <= 9; ++i) {
    grid.push_back(0.1 * i);
  }
  const auto rows = bound_tightness_sweep(0.031, 0.065, grid, Composition::Additive, 100000, 8);
  REQUIRE(rows.size() == grid.size());
  for (const auto& row : rows) {
    CHECK(row.samples == 100000);
    CHECK(row.independence_bound == Approx(0.0720139).margin(1e-6));
    CHECK(row.worst_case_bound == Approx(0.096).margin(1e-15));
    CHECK(row.empirical_sigma == Approx(additive_sigma(0.031, 0.065, row.rho)).epsilon(0.03));
    CHECK(row.empirical_sigma <= row.worst_case_bound * 1.02);
    if (row.rho >= 0.0) {
      CHECK(row.empirical_sigma >= row.independence_bound * 0.98);
    }
  }
  const auto again = bound_tightness_sweep(0.031, 0.065, grid, Composition::Additive, 100000, 8);
  CHECK(again[3].empirical_sigma == rows[3].empirical_sigma);

  const std::vector<double> single{0.0};
  const auto one = bound_tightness_sweep(0.031, 0.065, single, Composition::Additive, 1000, 1);
  CHECK(one.size() == 1);
  CHECK_THROWS_AS(bound_tightness_sweep(0.031, 0.065, std::vector<double>{}, Composition::Additive,
                                        1000, 1),
                  InvalidInput);
  CHECK_THROWS_AS(bound_tightness_sweep(0.031, 0.065, std::vector<double>{1.2},
                                        Composition::Additive, 1000, 1),
                  InvalidInput);
}
