#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mecsp/config.hpp"
#include "mecsp/experiment.hpp"

using mecsp::ConfigError;
using mecsp::ExperimentSpec;
using mecsp::PricingScheme;
using mecsp::SweepAxis;

namespace {

std::string fixture_path(const std::string& name) {
  return std::string(MECSP_FIXTURE_DIR) + "/" + name;
}

nlohmann::json minimal_config() {
  return nlohmann::json::parse(R"({
    "system": {
      "num_devices": 100,
      "edge_cpu_frequency": 1e8,
      "valuation": { "kind": "uniform", "lower": -1e-7, "upper": 1e-7 },
      "catalog": {
        "programs": [
          { "popularity": 0.5, "workload": 3e8, "size": 1, "cost": 1 },
          { "popularity": 0.5, "workload": 2e8, "size": 1, "cost": 1 }
        ],
        "capacity": 2
      }
    },
    "sweep": { "axis": "num_devices", "grid": [50, 100, 150] },
    "scheme": "uniform"
  })");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("golden fixtures parse cleanly") {
  const ExperimentSpec fixed = mecsp::validate_config(fixture_path("two_program_fixture.json"));
  CHECK(fixed.scheme == PricingScheme::FixedPrices);
  CHECK(fixed.axis == SweepAxis::Price1);
  CHECK(fixed.grid.size() == 8);
  CHECK(fixed.fixed_prices.size() == 2);
  REQUIRE(fixed.simulation.has_value());
  CHECK(fixed.simulation->replications == 2000);
  CHECK(fixed.warnings.empty());

  const ExperimentSpec diff = mecsp::validate_config(fixture_path("three_program_caching.json"));
  CHECK(diff.scheme == PricingScheme::Differentiated);
  CHECK(diff.axis == SweepAxis::EdgeFrequency);
  CHECK(diff.system.catalog.size() == 3);
  CHECK(diff.system.catalog.capacity == 2.0);
}

TEST_CASE("validation errors name the offending field") {
  auto expect_error = [](nlohmann::json root, const std::string& needle) {
    try {
      mecsp::parse_experiment(root);
      FAIL("expected ConfigError mentioning '" << needle << "'");
    } catch (const ConfigError& e) {
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring(needle));
    }
  };

  nlohmann::json bad = minimal_config();
  bad["system"]["catalog"]["programs"][0]["popularity"] = 0.4;  // sums to 0.9
  expect_error(bad, "popularity");

  bad = minimal_config();
  bad["system"].erase("edge_cpu_frequency");
  expect_error(bad, "system.edge_cpu_frequency");

  bad = minimal_config();
  bad["system"]["catalog"]["programs"][1].erase("workload");
  expect_error(bad, "programs[1]");

  bad = minimal_config();
  bad["sweep"]["axis"] = "temperature";
  expect_error(bad, "sweep.axis");

  bad = minimal_config();
  bad["sweep"]["grid"] = {100, 100};
  expect_error(bad, "strictly increasing");

  bad = minimal_config();
  bad["prices"] = {1e-8, 2e-8};
  expect_error(bad, "fixed-prices");

  bad = minimal_config();
  bad["sweep"]["axis"] = "price1";
  bad["sweep"]["grid"] = {1e-8, 2e-8};
  expect_error(bad, "price1");

  bad = minimal_config();
  bad["simulation"] = {{"replications", 1}, {"seed", 0}};
  expect_error(bad, "simulation.replications");

  bad = minimal_config();
  bad["system"]["valuation"]["kind"] = "cauchy";
  expect_error(bad, "valuation.kind");
}

TEST_CASE("a degenerate uniform-pricing system warns instead of failing") {
  nlohmann::json root = minimal_config();
  // Upper support 1e-9 < 1/f^c = 1e-8: no device would ever pay to offload.
  root["system"]["valuation"] = {{"kind", "uniform"}, {"lower", -1e-7}, {"upper", 1e-9}};
  const ExperimentSpec spec = mecsp::parse_experiment(root);
  REQUIRE_FALSE(spec.warnings.empty());
  CHECK_THAT(spec.warnings.front(), Catch::Matchers::ContainsSubstring("uniform price"));
}

TEST_CASE("resolved config json round-trips") {
  const ExperimentSpec spec = mecsp::validate_config(fixture_path("two_program_fixture.json"));
  const ExperimentSpec again = mecsp::parse_experiment(mecsp::resolved_config_json(spec));
  CHECK(again.scheme == spec.scheme);
  CHECK(again.axis == spec.axis);
  CHECK(again.grid == spec.grid);
  CHECK(again.fixed_prices == spec.fixed_prices);
  CHECK(again.system.num_devices == spec.system.num_devices);
  CHECK(again.system.catalog.size() == spec.system.catalog.size());
  REQUIRE(again.simulation.has_value());
  CHECK(again.simulation->seed == spec.simulation->seed);
}

TEST_CASE("popularity sweep rescales the remaining mass") {
  ExperimentSpec spec = mecsp::parse_experiment(minimal_config());
  spec.axis = SweepAxis::Popularity1;
  const mecsp::SystemConfig varied = mecsp::detail::apply_axis(spec, 0.2);
  CHECK(varied.catalog.programs[0].popularity == Catch::Approx(0.2));
  double total = 0.0;
  for (const auto& p : varied.catalog.programs) total += p.popularity;
  CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sweep output shape and monotone offloading in price") {
  const ExperimentSpec spec = mecsp::validate_config(fixture_path("two_program_fixture.json"));
  const mecsp::SweepResult result = mecsp::run_sweep(spec, 1e-14 * 1e-7);

  const std::size_t n = 2;
  // base columns + prices + delta + offload + cached + profit/converged
  // + simulation columns (2n + 3).
  CHECK(result.header.size() == 3 + n + 1 + n + n + 2 + 2 * n + 3);
  REQUIRE(result.rows.size() == spec.grid.size());
  for (const auto& row : result.rows) CHECK(row.size() == result.header.size());

  // Column 0 is the swept price of program 1; its offloading probability
  // must fall as the price rises.
  const std::size_t offload_col = 3 + n + 1;  // offload_prob_1
  double prev = 2.0;
  for (const auto& row : result.rows) {
    const double p = std::stod(row[offload_col]);
    CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("experiment reruns are byte-identical") {
  const ExperimentSpec spec = mecsp::validate_config(fixture_path("three_program_caching.json"));
  const auto tmp = std::filesystem::temp_directory_path();
  const auto dir_a = tmp / "mecsp_test_run_a";
  const auto dir_b = tmp / "mecsp_test_run_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  const double tol = 1e-14 * spec.system.sentinel_price();
  const auto csv_a = mecsp::run_experiment(spec, dir_a, tol);
  const auto csv_b = mecsp::run_experiment(spec, dir_b, tol);

  const std::string bytes_a = read_file(csv_a);
  const std::string bytes_b = read_file(csv_b);
  CHECK(bytes_a == bytes_b);
  CHECK_FALSE(bytes_a.empty());
  // RFC-4180 line endings.
  CHECK(bytes_a.find("\r\n") != std::string::npos);

  // The sidecar exists and echoes the resolved config.
  const auto meta = nlohmann::json::parse(read_file(dir_a / "profit_vs_fc.meta.json"));
  CHECK(meta["config"]["scheme"] == "differentiated");
  CHECK(meta["columns"].is_array());
  CHECK(meta["solver_tolerance"].get<double>() == tol);

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}
