// Command-line experiment runner: computes Stage-II equilibria, the uniform
// and differentiated Stage-I optima, Monte Carlo validation runs, and full
// parameter sweeps, writing CSV + JSON metadata for external plotting.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mecsp/config.hpp"
#include "mecsp/equilibrium.hpp"
#include "mecsp/experiment.hpp"
#include "mecsp/pricing_differentiated.hpp"
#include "mecsp/pricing_uniform.hpp"
#include "mecsp/simulator.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

mecsp::SystemConfig load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mecsp::ConfigError(path + ": cannot open config file");
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::parse_error& e) {
    throw mecsp::ConfigError(path + ": JSON parse error: " + e.what());
  }
  return mecsp::detail::parse_system(mecsp::detail::require_field(root, "", "system"), "system");
}

mecsp::PriceVector load_prices(const std::string& path, const mecsp::SystemConfig& config) {
  std::ifstream in(path);
  nlohmann::json root;
  in >> root;
  if (!root.contains("prices")) {
    throw mecsp::ConfigError("prices: required for this subcommand");
  }
  const auto& prices = root.at("prices");
  if (!prices.is_array() || prices.size() != config.catalog.size()) {
    throw mecsp::ConfigError("prices: expected one entry per catalog program");
  }
  mecsp::PriceVector out;
  for (const auto& v : prices) out.push_back(v.get<double>());
  return out;
}

nlohmann::json prices_json(const mecsp::PriceVector& prices) {
  return nlohmann::json(prices);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Service caching and pricing solver for edge task offloading"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::size_t replications = 10000;
  double tol = 0.0;  // 0 means per-solver default

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", config_path, "Path to the JSON config file")->required();
    if (needs_out) cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option("--tol", tol, "Solver tolerance override");
    return cmd;
  };

  CLI::App* eq = add_common(app.add_subcommand("equilibrium", "Solve the Stage-II equilibrium "
                                                              "for the prices in the config"),
                            false);
  CLI::App* uni = add_common(app.add_subcommand("solve-uniform", "Optimal uniform price and "
                                                                 "knapsack caching"),
                             false);
  CLI::App* diff = add_common(app.add_subcommand("solve-diff", "Optimal differentiated prices "
                                                               "and caching by enumeration"),
                              false);
  CLI::App* sim = add_common(app.add_subcommand("simulate", "Monte Carlo validation of the "
                                                            "equilibrium prediction"),
                             false);
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--replications", replications, "Monte Carlo replications");
  CLI::App* sweep = add_common(app.add_subcommand("sweep", "Run the parameter sweep described "
                                                           "by the config"),
                               true);
  sweep->add_option("--seed", seed, "Simulation seed override");
  sweep->add_option("--replications", replications, "Simulation replications override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eq->parsed()) {
      const mecsp::SystemConfig config = load_system(config_path);
      const mecsp::PriceVector prices = load_prices(config_path, config);
      const double use_tol = tol > 0.0 ? tol : mecsp::default_delta_tolerance(config);
      const mecsp::EquilibriumOutcome outcome = mecsp::solve_delta(config, prices, use_tol);
      nlohmann::json out;
      out["delta_star"] = outcome.delta_star;
      out["offload_prob"] = outcome.offload_prob;
      out["residual"] = outcome.residual;
      out["expected_offloaders"] = outcome.expected_offloaders;
      std::cout << out.dump(2) << "\n";
    } else if (uni->parsed()) {
      const mecsp::SystemConfig config = load_system(config_path);
      const double use_tol = tol > 0.0 ? tol : mecsp::default_price_tolerance(config);
      const mecsp::UniformPricingResult r = mecsp::solve_p2(config, use_tol);
      nlohmann::json out;
      out["price"] = r.price;
      out["delta_star"] = r.delta_star;
      out["offload_prob"] = r.offload_prob;
      out["expected_profit"] = r.expected_profit;
      out["residual"] = r.residual;
      out["cache"] = std::vector<bool>(r.cache.selected.begin(), r.cache.selected.end());
      std::cout << out.dump(2) << "\n";
    } else if (diff->parsed()) {
      const mecsp::SystemConfig config = load_system(config_path);
      const double use_tol = tol > 0.0 ? tol : mecsp::default_diff_tolerance(config);
      const mecsp::DiffPricingResult r = mecsp::solve_p3(config, use_tol, 500);
      if (!r.converged) {
        std::cerr << "warning: price iteration did not converge within the iteration budget\n";
      }
      nlohmann::json out;
      out["prices"] = prices_json(r.prices);
      out["delta_star"] = r.delta_star;
      out["offload_prob"] = r.offload_prob;
      out["expected_profit"] = r.expected_profit;
      out["iterations"] = r.iterations;
      out["max_residual"] = r.max_residual;
      out["converged"] = r.converged;
      out["cache"] = std::vector<bool>(r.cache.selected.begin(), r.cache.selected.end());
      std::cout << out.dump(2) << "\n";
    } else if (sim->parsed()) {
      const mecsp::SystemConfig config = load_system(config_path);
      const mecsp::PriceVector prices = load_prices(config_path, config);
      const mecsp::EquilibriumOutcome eq_out = mecsp::solve_delta(config, prices);
      mecsp::CacheSet cache;
      cache.selected.assign(config.catalog.size(), true);
      const mecsp::SimulationReport report =
          mecsp::estimate_profit(config, prices, cache, replications, seed, eq_out.delta_star);
      const mecsp::DeviationReport deviation =
          mecsp::deviation_check(config, prices, eq_out.delta_star, replications, seed);
      nlohmann::json out;
      out["replications"] = report.replications;
      out["delta_star"] = eq_out.delta_star;
      out["analytic_offload_prob"] = eq_out.offload_prob;
      out["empirical_offload_prob"] = report.empirical_offload_prob;
      out["offload_ci_halfwidth"] = report.offload_ci_halfwidth;
      out["empirical_profit"] = report.empirical_profit;
      out["profit_ci_halfwidth"] = report.profit_ci_halfwidth;
      out["empirical_mean_cost"] = report.empirical_mean_cost;
      out["m_mean"] = report.m_mean;
      out["m_variance"] = report.m_variance;
      out["max_deviation_gain"] = deviation.max_gain;
      out["deviation_std_error"] = deviation.std_error;
      std::cout << out.dump(2) << "\n";
    } else if (sweep->parsed()) {
      mecsp::ExperimentSpec spec = mecsp::validate_config(config_path);
      for (const std::string& warning : spec.warnings) {
        std::cerr << "warning: " << warning << "\n";
      }
      if (spec.simulation) {
        if (sweep->count("--seed")) spec.simulation->seed = seed;
        if (sweep->count("--replications")) spec.simulation->replications = replications;
      }
      const double use_tol = tol > 0.0 ? tol : mecsp::default_price_tolerance(spec.system);
      const std::filesystem::path csv = mecsp::run_experiment(spec, out_dir, use_tol);
      std::cout << csv.string() << "\n";
    }
  } catch (const mecsp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
