#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mecsp/rng.hpp"
#include "mecsp/valuation.hpp"

using mecsp::ProgramCatalog;
using mecsp::ValuationModel;

namespace {

ProgramCatalog two_equal_programs() {
  ProgramCatalog catalog;
  catalog.programs = {{0.5, 3e8, 1.0, 1.0}, {0.5, 3e8, 1.0, 1.0}};
  catalog.capacity = 2.0;
  return catalog;
}

}  // namespace

TEST_CASE("uniform pdf and cdf") {
  const auto model = ValuationModel::uniform(-1e-7, 1e-7);
  CHECK(model.pdf(0.0) == Catch::Approx(5e6));
  CHECK(model.pdf(2e-7) == 0.0);
  CHECK(model.cdf(0.0) == Catch::Approx(0.5));
  CHECK(model.cdf(1e-7) == 1.0);
  CHECK(model.cdf(-2e-7) == 0.0);
}

TEST_CASE("normal pdf and cdf reference values") {
  const auto model = ValuationModel::normal(0.0, 1e-7);
  const double expected_peak = 1.0 / (1e-7 * std::sqrt(2.0 * std::numbers::pi));
  CHECK(model.pdf(0.0) == Catch::Approx(expected_peak).epsilon(1e-10));
  // Phi(1) from the standard normal table.
  CHECK(model.cdf(1e-7) == Catch::Approx(0.8413447460685429).margin(1e-6));
  CHECK(model.cdf(model.support_lower()) == 0.0);
  CHECK(model.cdf(model.support_upper()) == 1.0);
}

TEST_CASE("exponential with shift keeps negative valuations representable") {
  const auto model = ValuationModel::exponential(1e7, -5e-8);
  CHECK(model.pdf(-1e-7) == 0.0);
  CHECK(model.cdf(-5e-8) == 0.0);
  CHECK(model.cdf(-5e-8 + 1.0 / 1e7) == Catch::Approx(1.0 - std::exp(-1.0)));
  CHECK(model.mean() == Catch::Approx(-5e-8 + 1e-7));
}

TEST_CASE("constructor invariants are enforced") {
  CHECK_THROWS_AS(ValuationModel::uniform(1e-7, 1e-7), std::invalid_argument);
  CHECK_THROWS_AS(ValuationModel::normal(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ValuationModel::exponential(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("all built-in families are regular") {
  CHECK(mecsp::check_regularity(ValuationModel::uniform(-1e-7, 1e-7), 1000));
  CHECK(mecsp::check_regularity(ValuationModel::exponential(1e7, 0.0), 1000));
  CHECK(mecsp::check_regularity(ValuationModel::normal(2e-8, 5e-8), 1000));

  // Randomized parameters.
  mecsp::RandomStream rng(42, 0);
  for (int i = 0; i < 25; ++i) {
    const double a = -1e-6 * rng.next_u01();
    const double b = 1e-8 + 1e-6 * rng.next_u01();
    CHECK(mecsp::check_regularity(ValuationModel::uniform(a, b), 500));
    CHECK(mecsp::check_regularity(ValuationModel::normal(a, b), 500));
    CHECK(mecsp::check_regularity(ValuationModel::exponential(1.0 / b, a), 500));
  }
}

TEST_CASE("regularity check rejects tiny grids") {
  CHECK_THROWS_AS(mecsp::check_regularity(ValuationModel::uniform(0.0, 1.0), 1),
                  std::invalid_argument);
}

TEST_CASE("virtual value is linear for the uniform family") {
  const auto model = ValuationModel::uniform(-1e-7, 1e-7);
  // y(theta) = 2 theta - upper.
  CHECK(model.virtual_value(0.0) == Catch::Approx(-1e-7));
  CHECK(model.virtual_value(5e-8) == Catch::Approx(0.0).margin(1e-20));
}

TEST_CASE("cdf derivative matches pdf") {
  const ValuationModel models[] = {ValuationModel::uniform(-1e-7, 1e-7),
                                   ValuationModel::normal(1e-8, 4e-8),
                                   ValuationModel::exponential(2e7, -2e-8)};
  for (const auto& model : models) {
    const double lo = model.support_lower();
    const double width = model.support_width();
    const double h = 1e-5 * width;
    for (int i = 0; i < 1000; ++i) {
      const double theta = lo + (i + 0.5) / 1000.0 * width;
      const double f = model.cdf(theta);
      // Tail points where the CDF saturates at double precision carry no
      // resolvable derivative information.
      if (f < 1e-12 || f > 1.0 - 1e-12) continue;
      // Difference whichever of F and 1-F is small at this point; the other
      // one saturates near 1 and cancels catastrophically.
      const double numeric =
          f < 0.5 ? (model.cdf(theta + h) - model.cdf(theta - h)) / (2.0 * h)
                  : (model.survival(theta - h) - model.survival(theta + h)) / (2.0 * h);
      CHECK(numeric == Catch::Approx(model.pdf(theta)).epsilon(1e-6));
    }
  }
}

TEST_CASE("quantile inverts the cdf") {
  const ValuationModel models[] = {ValuationModel::uniform(-1e-7, 1e-7),
                                   ValuationModel::normal(0.0, 1e-7),
                                   ValuationModel::exponential(1e7, -5e-8)};
  for (const auto& model : models) {
    for (double u : {0.01, 0.1, 0.3, 0.5, 0.77, 0.9, 0.999}) {
      CHECK(model.cdf(model.quantile(u)) == Catch::Approx(u).epsilon(1e-9));
    }
  }
}

TEST_CASE("mixture cdf degenerates to the plain cdf for one free program") {
  const auto model = ValuationModel::uniform(-1e-7, 1e-7);
  ProgramCatalog catalog;
  catalog.programs = {{1.0, 3e8, 1.0, 1.0}};
  catalog.capacity = 1.0;
  for (double beta : {-1.5e-7, -5e-8, 0.0, 3e-8, 9e-8, 2e-7}) {
    CHECK(mecsp::mixture_cdf(model, catalog, {0.0}, beta) == Catch::Approx(model.cdf(beta)).margin(0.0));
  }
}

TEST_CASE("mixture cdf worked example and limits") {
  const auto model = ValuationModel::uniform(-1e-7, 1e-7);
  const ProgramCatalog catalog = two_equal_programs();
  const mecsp::PriceVector prices{5e-8, 5e-8};
  // G(beta) = F(beta + 5e-8); F(9.328e-8) = (9.328e-8 + 1e-7) / 2e-7.
  CHECK(mecsp::mixture_cdf(model, catalog, prices, 4.328e-8) == Catch::Approx(0.9664));
  CHECK(mecsp::mixture_cdf(model, catalog, prices, 1.0) == 1.0);
  CHECK_THROWS_AS(mecsp::mixture_cdf(model, catalog, {5e-8}, 0.0), std::invalid_argument);
}

TEST_CASE("mixture cdf is monotone in beta and in each price") {
  const auto model = ValuationModel::normal(0.0, 5e-8);
  const ProgramCatalog catalog = two_equal_programs();
  mecsp::PriceVector prices{2e-8, 6e-8};
  double prev = -1.0;
  for (int i = 0; i <= 50; ++i) {
    const double beta = -4e-7 + i * (8e-7 / 50);
    const double g = mecsp::mixture_cdf(model, catalog, prices, beta);
    CHECK(g >= prev);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
    prev = g;
  }
  const double base = mecsp::mixture_cdf(model, catalog, prices, 1e-8);
  for (std::size_t j = 0; j < prices.size(); ++j) {
    auto bumped = prices;
    bumped[j] += 1e-8;
    CHECK(mecsp::mixture_cdf(model, catalog, bumped, 1e-8) >= base);
  }
}

TEST_CASE("catalog validation rejects bad popularity sums") {
  ProgramCatalog catalog = two_equal_programs();
  catalog.programs[0].popularity = 0.4;  // sums to 0.9
  CHECK_THROWS_WITH(catalog.validate(), Catch::Matchers::ContainsSubstring("popularity"));

  catalog = two_equal_programs();
  catalog.programs[1].workload = 0.0;
  CHECK_THROWS_WITH(catalog.validate(), Catch::Matchers::ContainsSubstring("workload"));

  catalog = two_equal_programs();
  CHECK_NOTHROW(catalog.validate());
}
