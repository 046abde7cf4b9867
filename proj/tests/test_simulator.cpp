#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mecsp/equilibrium.hpp"
#include "mecsp/simulator.hpp"

using mecsp::CacheSet;
using mecsp::PhysicalParams;
using mecsp::PriceVector;
using mecsp::SystemConfig;
using mecsp::ValuationModel;
using mecsp::WDSample;

namespace {

SystemConfig single_program_fixture() {
  SystemConfig config;
  config.num_devices = 100;
  config.edge_cpu_frequency = 1e8;
  config.valuation = ValuationModel::uniform(-1e-7, 1e-7);
  config.catalog.programs = {{1.0, 3e8, 1.0, 1.0}};
  config.catalog.capacity = 1.0;
  return config;
}

SystemConfig two_program_fixture() {
  SystemConfig config = single_program_fixture();
  config.catalog.programs = {{0.3, 3e8, 1.0, 1.0}, {0.7, 2e8, 1.0, 1.0}};
  config.catalog.capacity = 2.0;
  return config;
}

CacheSet full_cache(std::size_t n) {
  CacheSet cache;
  cache.selected.assign(n, true);
  return cache;
}

}  // namespace

TEST_CASE("population sampling is deterministic and stream-addressed") {
  SystemConfig config = two_program_fixture();
  const auto a = mecsp::sample_population(config, 42);
  const auto b = mecsp::sample_population(config, 42);
  REQUIRE(a.size() == 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].theta == b[i].theta);
    CHECK(a[i].program == b[i].program);
  }

  const auto other_seed = mecsp::sample_population(config, 43);
  const auto other_rep = mecsp::sample_population(config, 42, nullptr, 1);
  int diff_seed = 0, diff_rep = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff_seed += a[i].theta != other_seed[i].theta;
    diff_rep += a[i].theta != other_rep[i].theta;
  }
  CHECK(diff_seed > 90);
  CHECK(diff_rep > 90);
}

TEST_CASE("prior mode synthesizes a consistent timing block") {
  SystemConfig config = two_program_fixture();
  for (const WDSample& s : mecsp::sample_population(config, 7)) {
    CHECK_FALSE(s.physical);
    CHECK(s.tau_u == 0.0);
    CHECK(s.tau_l == s.theta * s.workload);
    CHECK((s.tau_l - s.tau_u) / s.workload == Catch::Approx(s.theta).epsilon(1e-15));
  }
}

TEST_CASE("sampled program shares and valuation moments match the model") {
  SystemConfig config = two_program_fixture();
  std::size_t n = 0, first = 0;
  double sum = 0.0, sumsq = 0.0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    for (const WDSample& s : mecsp::sample_population(config, 11, nullptr, r)) {
      ++n;
      first += s.program == 0;
      sum += s.theta;
      sumsq += s.theta * s.theta;
    }
  }
  const double nn = static_cast<double>(n);
  const double share = static_cast<double>(first) / nn;
  CHECK(std::abs(share - 0.3) <= 3.0 * std::sqrt(0.3 * 0.7 / nn));

  const double mean = sum / nn;
  const double var = sumsq / nn - mean * mean;
  const double model_var = config.valuation.variance();
  CHECK(std::abs(mean - config.valuation.mean()) <= 4.0 * std::sqrt(model_var / nn));
  CHECK(var == Catch::Approx(model_var).epsilon(0.05));
}

TEST_CASE("physical mode worked example") {
  SystemConfig config = single_program_fixture();
  config.num_devices = 10;
  PhysicalParams physical;
  // SNR p h / sigma^2 = 1 so the rate is W log2(2) = 1e6 bit/s; uploading
  // 1e6 bits takes exactly one second.
  physical.input_bits = {1e6, 1e6};
  physical.bandwidth = {1e6, 1e6};
  physical.tx_power = {1.0, 1.0};
  physical.channel_gain = {1.0, 1.0};
  physical.noise_power = {1.0, 1.0};
  physical.local_cpu = {1e8, 1e8};

  for (const WDSample& s : mecsp::sample_population(config, 3, &physical)) {
    CHECK(s.physical);
    CHECK(s.tau_u == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(s.tau_l == Catch::Approx(3.0).epsilon(1e-12));  // 3e8 cycles at 1e8/s
    CHECK(s.theta == Catch::Approx((3.0 - 1.0) / 3e8).epsilon(1e-12));
  }

  physical.noise_power = {0.0, 0.0};
  CHECK_THROWS_AS(mecsp::sample_population(config, 3, &physical), std::invalid_argument);
}

TEST_CASE("physical-mode threshold rule equals the timing-cost comparison") {
  SystemConfig config = single_program_fixture();
  PhysicalParams physical;
  physical.input_bits = {1e5, 1e7};
  physical.bandwidth = {1e6, 1e7};
  physical.tx_power = {0.1, 1.0};
  physical.channel_gain = {1e-4, 1e-2};
  physical.noise_power = {1e-6, 1e-5};
  physical.local_cpu = {5e7, 5e8};

  const double pi = 5e-8;
  const double delta = mecsp::solve_delta(config, {pi}).delta_star;
  const auto population = mecsp::sample_population(config, 17, &physical);
  const auto play = mecsp::play_threshold_policy(population, {pi}, delta);
  for (std::size_t i = 0; i < population.size(); ++i) {
    const WDSample& s = population[i];
    // theta >= pi + delta  <=>  tau_l >= tau_u + L delta + L pi.
    const bool cost_rule = s.tau_l >= s.tau_u + s.workload * delta + s.workload * pi;
    CHECK(play.offload[i] == cost_rule);
  }
}

TEST_CASE("threshold policy is boundary inclusive and sentinel aware") {
  SystemConfig config = single_program_fixture();
  const double pi = 4e-8, delta = 5e-8;
  WDSample at_boundary;
  at_boundary.theta = pi + delta;
  at_boundary.program = 0;
  WDSample below;
  below.theta = pi + delta - 1e-20;
  below.program = 0;
  const auto play = mecsp::play_threshold_policy({at_boundary, below}, {pi}, delta);
  CHECK(play.offload[0]);
  CHECK_FALSE(play.offload[1]);
  CHECK(play.num_offloaders == 1);

  // The sentinel price exceeds every attainable theta, so nobody offloads.
  const auto population = mecsp::sample_population(config, 5);
  const auto none =
      mecsp::play_threshold_policy(population, {config.sentinel_price()}, delta);
  CHECK(none.num_offloaders == 0);
}

TEST_CASE("realized cost cases") {
  WDSample s;
  s.tau_l = 3.0;
  s.tau_u = 1.0;
  s.workload = 3e8;
  CHECK(mecsp::realized_cost(s, false, 0, 5e-8, 1e8) == 3.0);
  // 1 + 3e8 * 4 / 1e8 + 3e8 * 5e-8 = 1 + 12 + 15.
  CHECK(mecsp::realized_cost(s, true, 4, 5e-8, 1e8) == Catch::Approx(28.0).epsilon(1e-12));
  CHECK_THROWS_AS(mecsp::realized_cost(s, true, 0, 5e-8, 1e8), std::invalid_argument);
}

TEST_CASE("no profitable deviation at equilibrium") {
  SystemConfig config = single_program_fixture();
  const PriceVector prices{5e-8};
  const double delta = mecsp::solve_delta(config, prices).delta_star;
  const auto report = mecsp::deviation_check(config, prices, delta, 4000, 19);
  // With the exact binomial mean the gain is provably nonpositive.
  CHECK(report.max_gain_exact <= 1e-15);
  // The Monte Carlo estimate may wobble by a few standard errors.
  CHECK(report.max_gain <= report.max_gain_exact + 4.0 * report.std_error + 1e-15);
  CHECK(report.std_error > 0.0);

  CHECK_THROWS_AS(mecsp::deviation_check(config, prices, delta, 1, 19), std::invalid_argument);
}

TEST_CASE("a perturbed threshold invites profitable deviations") {
  SystemConfig config = single_program_fixture();
  const PriceVector prices{5e-8};
  const double delta = mecsp::solve_delta(config, prices).delta_star;
  const auto report = mecsp::deviation_check(config, prices, 3.0 * delta, 4000, 19);
  CHECK(report.max_gain_exact > 0.0);
}

TEST_CASE("estimate_profit agrees with the analytic expectation") {
  SystemConfig config = single_program_fixture();
  const double pi = 4.5e-8;
  const mecsp::EquilibriumOutcome eq = mecsp::solve_delta(config, {pi});
  const CacheSet cache = full_cache(1);
  const auto report = mecsp::estimate_profit(config, {pi}, cache, 3000, 23, eq.delta_star);

  const double analytic =
      100.0 * eq.offload_prob[0] * pi * 3e8 - 1.0;  // M q p pi L - r
  CHECK(std::abs(report.empirical_profit - analytic) <= 2.0 * report.profit_ci_halfwidth);
  CHECK(std::abs(report.empirical_offload_prob[0] - eq.offload_prob[0]) <=
        2.0 * report.offload_ci_halfwidth[0]);

  // m ~ Binomial(M, p): check both moments.
  const double p = eq.offload_prob[0];
  const double se = std::sqrt(100.0 * p * (1.0 - p) / 3000.0);
  CHECK(std::abs(report.m_mean - 100.0 * p) <= 4.0 * se);
  CHECK(report.m_variance == Catch::Approx(100.0 * p * (1.0 - p)).epsilon(0.15));

  CHECK_THROWS_AS(mecsp::estimate_profit(config, {pi}, cache, 1, 23, eq.delta_star),
                  std::invalid_argument);
}

TEST_CASE("estimate_profit with an empty cache or sentinel prices") {
  SystemConfig config = single_program_fixture();
  const double pi = 4.5e-8;
  const double delta = mecsp::solve_delta(config, {pi}).delta_star;

  SECTION("empty cache earns nothing and pays nothing") {
    CacheSet empty;
    empty.selected.assign(1, false);
    const auto report = mecsp::estimate_profit(config, {pi}, empty, 50, 5, delta);
    CHECK(report.empirical_profit == 0.0);
    CHECK(report.profit_ci_halfwidth == 0.0);
  }

  SECTION("sentinel prices yield zero revenue but still bill acquisition") {
    const PriceVector prices{config.sentinel_price()};
    const double d = mecsp::solve_delta(config, prices).delta_star;
    const auto report = mecsp::estimate_profit(config, prices, full_cache(1), 50, 5, d);
    CHECK(report.empirical_profit == Catch::Approx(-1.0));  // acquisition cost only
    CHECK(report.empirical_offload_prob[0] == 0.0);
    // Everyone computes locally: mean cost is E[theta] * L for theta ~ the
    // valuation prior (mean 0 here), so small relative to |theta| * L scales.
    CHECK(std::abs(report.empirical_mean_cost) <= 3e8 * 1e-7);
  }
}

TEST_CASE("estimate_profit is reproducible") {
  SystemConfig config = two_program_fixture();
  const PriceVector prices{4e-8, 5e-8};
  const double delta = mecsp::solve_delta(config, prices).delta_star;
  const auto a = mecsp::estimate_profit(config, prices, full_cache(2), 200, 31, delta);
  const auto b = mecsp::estimate_profit(config, prices, full_cache(2), 200, 31, delta);
  CHECK(a.empirical_profit == b.empirical_profit);
  CHECK(a.m_mean == b.m_mean);
  CHECK(a.empirical_offload_prob == b.empirical_offload_prob);
}
