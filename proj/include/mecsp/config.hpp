#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mecsp/equilibrium.hpp"
#include "mecsp/pricing_uniform.hpp"
#include "mecsp/valuation.hpp"

namespace mecsp {

/// Raised on any config violation; `what()` names the offending field path
/// and the expected constraint.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class SweepAxis { Price1, EdgeFrequency, NumDevices, Popularity1 };
enum class PricingScheme { Uniform, Differentiated, FixedPrices };

/// One experiment: a base system, a single sweep axis with a sorted grid, a
/// pricing scheme, and an optional simulation block.
struct ExperimentSpec {
  SystemConfig system;
  SweepAxis axis = SweepAxis::Price1;
  std::vector<double> grid;
  PricingScheme scheme = PricingScheme::Uniform;
  PriceVector fixed_prices;  // required for FixedPrices

  struct Simulation {
    std::size_t replications = 0;
    std::uint64_t seed = 0;
  };
  std::optional<Simulation> simulation;

  std::string output_name = "experiment";
  std::vector<std::string> warnings;  // non-fatal validation notes
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& node, const std::string& path,
                                           const std::string& key) {
  if (!node.contains(key)) {
    throw ConfigError(path + "." + key + ": required field is missing");
  }
  return node.at(key);
}

inline double require_number(const nlohmann::json& node, const std::string& path,
                             const std::string& key) {
  const nlohmann::json& v = require_field(node, path, key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline ValuationModel parse_valuation(const nlohmann::json& node, const std::string& path) {
  const std::string kind = require_field(node, path, "kind").get<std::string>();
  try {
    if (kind == "uniform") {
      return ValuationModel::uniform(require_number(node, path, "lower"),
                                     require_number(node, path, "upper"));
    }
    if (kind == "normal") {
      return ValuationModel::normal(require_number(node, path, "mean"),
                                    require_number(node, path, "stddev"));
    }
    if (kind == "exponential") {
      return ValuationModel::exponential(require_number(node, path, "rate"),
                                         require_number(node, path, "shift"));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".kind: must be one of uniform | normal | exponential");
}

inline SystemConfig parse_system(const nlohmann::json& node, const std::string& path) {
  SystemConfig config;
  config.num_devices = static_cast<int>(require_number(node, path, "num_devices"));
  config.edge_cpu_frequency = require_number(node, path, "edge_cpu_frequency");
  config.valuation = parse_valuation(require_field(node, path, "valuation"), path + ".valuation");

  const nlohmann::json& cat = require_field(node, path, "catalog");
  const std::string cpath = path + ".catalog";
  const nlohmann::json& programs = require_field(cat, cpath, "programs");
  if (!programs.is_array() || programs.empty()) {
    throw ConfigError(cpath + ".programs: expected a nonempty array");
  }
  for (std::size_t j = 0; j < programs.size(); ++j) {
    const std::string ppath = cpath + ".programs[" + std::to_string(j) + "]";
    const nlohmann::json& p = programs.at(j);
    Program program;
    program.popularity = require_number(p, ppath, "popularity");
    program.workload = require_number(p, ppath, "workload");
    program.size = require_number(p, ppath, "size");
    program.cost = require_number(p, ppath, "cost");
    config.catalog.programs.push_back(program);
  }
  config.catalog.capacity = require_number(cat, cpath, "capacity");
  config.catalog.granularity =
      cat.contains("granularity") ? require_number(cat, cpath, "granularity") : 1.0;

  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config;
}

}  // namespace detail

/// Parses and fully validates an experiment spec. Never partially constructs
/// a spec: any violation throws ConfigError naming the field path.
inline ExperimentSpec parse_experiment(const nlohmann::json& root) {
  ExperimentSpec spec;
  spec.system = detail::parse_system(detail::require_field(root, "", "system"), "system");

  const nlohmann::json& sweep = detail::require_field(root, "", "sweep");
  const std::string axis = detail::require_field(sweep, "sweep", "axis").get<std::string>();
  if (axis == "price1") {
    spec.axis = SweepAxis::Price1;
  } else if (axis == "edge_cpu_frequency") {
    spec.axis = SweepAxis::EdgeFrequency;
  } else if (axis == "num_devices") {
    spec.axis = SweepAxis::NumDevices;
  } else if (axis == "popularity1") {
    spec.axis = SweepAxis::Popularity1;
  } else {
    throw ConfigError(
        "sweep.axis: must be one of price1 | edge_cpu_frequency | num_devices | popularity1");
  }
  const nlohmann::json& grid = detail::require_field(sweep, "sweep", "grid");
  if (!grid.is_array() || grid.empty()) throw ConfigError("sweep.grid: expected a nonempty array");
  for (const auto& v : grid) {
    if (!v.is_number()) throw ConfigError("sweep.grid: entries must be numbers");
    spec.grid.push_back(v.get<double>());
  }
  for (std::size_t i = 1; i < spec.grid.size(); ++i) {
    if (spec.grid[i] <= spec.grid[i - 1]) {
      throw ConfigError("sweep.grid: grid must be strictly increasing");
    }
  }

  const std::string scheme = detail::require_field(root, "", "scheme").get<std::string>();
  if (scheme == "uniform") {
    spec.scheme = PricingScheme::Uniform;
  } else if (scheme == "differentiated") {
    spec.scheme = PricingScheme::Differentiated;
  } else if (scheme == "fixed-prices") {
    spec.scheme = PricingScheme::FixedPrices;
  } else {
    throw ConfigError("scheme: must be one of uniform | differentiated | fixed-prices");
  }

  if (spec.scheme == PricingScheme::FixedPrices) {
    const nlohmann::json& prices = detail::require_field(root, "", "prices");
    if (!prices.is_array() || prices.size() != spec.system.catalog.size()) {
      throw ConfigError("prices: expected one entry per catalog program");
    }
    for (std::size_t j = 0; j < prices.size(); ++j) {
      if (!prices.at(j).is_number()) throw ConfigError("prices: entries must be numbers");
      const double pi = prices.at(j).get<double>();
      if (pi < 0.0) throw ConfigError("prices[" + std::to_string(j) + "]: must be >= 0");
      spec.fixed_prices.push_back(pi);
    }
  } else if (root.contains("prices")) {
    throw ConfigError("prices: only valid with scheme = fixed-prices");
  }

  if (root.contains("simulation")) {
    const nlohmann::json& sim = root.at("simulation");
    ExperimentSpec::Simulation block;
    block.replications = static_cast<std::size_t>(detail::require_number(sim, "simulation", "replications"));
    if (block.replications < 2) throw ConfigError("simulation.replications: must be >= 2");
    block.seed = static_cast<std::uint64_t>(detail::require_number(sim, "simulation", "seed"));
    spec.simulation = block;
  }

  if (root.contains("output_name")) {
    spec.output_name = root.at("output_name").get<std::string>();
  }

  // Structural checks against the sweep.
  if (spec.axis == SweepAxis::Price1 && spec.scheme != PricingScheme::FixedPrices) {
    throw ConfigError("sweep.axis = price1 requires scheme = fixed-prices");
  }
  if (spec.axis == SweepAxis::Popularity1 && spec.system.catalog.size() < 2) {
    throw ConfigError("sweep.axis = popularity1 requires at least two programs");
  }
  if (spec.axis == SweepAxis::Popularity1) {
    for (const double v : spec.grid) {
      if (v < 0.0 || v > 1.0) throw ConfigError("sweep.grid: popularity values must be in [0,1]");
    }
  }
  if (spec.axis == SweepAxis::NumDevices) {
    for (const double v : spec.grid) {
      if (v < 1.0) throw ConfigError("sweep.grid: num_devices values must be >= 1");
    }
  }
  if (spec.axis == SweepAxis::EdgeFrequency) {
    for (const double v : spec.grid) {
      if (!(v > 0.0)) throw ConfigError("sweep.grid: edge_cpu_frequency values must be > 0");
    }
  }

  check_regularity(spec.system.valuation, 1000);

  if (spec.scheme == PricingScheme::Uniform &&
      !(spec.system.valuation.support_upper() > 1.0 / spec.system.edge_cpu_frequency)) {
    spec.warnings.push_back(
        "system.valuation: upper support <= 1/f^c, the optimal uniform price degenerates "
        "(no device would ever offload)");
  }
  return spec;
}

/// Loads and validates an experiment spec from a JSON file.
inline ExperimentSpec validate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": JSON parse error: " + e.what());
  }
  return parse_experiment(root);
}

/// Serializes the fully resolved spec back to JSON, used for the metadata
/// sidecar written next to every result file.
inline nlohmann::json resolved_config_json(const ExperimentSpec& spec) {
  nlohmann::json root;
  nlohmann::json system;
  system["num_devices"] = spec.system.num_devices;
  system["edge_cpu_frequency"] = spec.system.edge_cpu_frequency;
  nlohmann::json valuation;
  switch (spec.system.valuation.kind()) {
    case ValuationModel::Kind::Uniform:
      valuation["kind"] = "uniform";
      valuation["lower"] = spec.system.valuation.param1();
      valuation["upper"] = spec.system.valuation.param2();
      break;
    case ValuationModel::Kind::Normal:
      valuation["kind"] = "normal";
      valuation["mean"] = spec.system.valuation.param1();
      valuation["stddev"] = spec.system.valuation.param2();
      break;
    case ValuationModel::Kind::Exponential:
      valuation["kind"] = "exponential";
      valuation["shift"] = spec.system.valuation.param1();
      valuation["rate"] = spec.system.valuation.param2();
      break;
  }
  system["valuation"] = valuation;
  nlohmann::json programs = nlohmann::json::array();
  for (const Program& p : spec.system.catalog.programs) {
    programs.push_back({{"popularity", p.popularity},
                        {"workload", p.workload},
                        {"size", p.size},
                        {"cost", p.cost}});
  }
  system["catalog"] = {{"programs", programs},
                       {"capacity", spec.system.catalog.capacity},
                       {"granularity", spec.system.catalog.granularity}};
  root["system"] = system;

  switch (spec.axis) {
    case SweepAxis::Price1: root["sweep"]["axis"] = "price1"; break;
    case SweepAxis::EdgeFrequency: root["sweep"]["axis"] = "edge_cpu_frequency"; break;
    case SweepAxis::NumDevices: root["sweep"]["axis"] = "num_devices"; break;
    case SweepAxis::Popularity1: root["sweep"]["axis"] = "popularity1"; break;
  }
  root["sweep"]["grid"] = spec.grid;
  switch (spec.scheme) {
    case PricingScheme::Uniform: root["scheme"] = "uniform"; break;
    case PricingScheme::Differentiated: root["scheme"] = "differentiated"; break;
    case PricingScheme::FixedPrices:
      root["scheme"] = "fixed-prices";
      root["prices"] = spec.fixed_prices;
      break;
  }
  if (spec.simulation) {
    root["simulation"] = {{"replications", spec.simulation->replications},
                          {"seed", spec.simulation->seed}};
  }
  root["output_name"] = spec.output_name;
  return root;
}

}  // namespace mecsp
