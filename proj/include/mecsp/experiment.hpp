#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mecsp/config.hpp"
#include "mecsp/pricing_differentiated.hpp"
#include "mecsp/pricing_uniform.hpp"
#include "mecsp/simulator.hpp"

namespace mecsp {

/// A finished sweep: a fixed header and one row per grid point, in grid
/// order. Cells are preformatted strings so CSV output is byte-stable.
struct SweepResult {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (const char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Applies one grid value to a copy of the base system.
inline SystemConfig apply_axis(const ExperimentSpec& spec, double value) {
  SystemConfig config = spec.system;
  switch (spec.axis) {
    case SweepAxis::Price1:
      break;  // handled on the price vector, not the system
    case SweepAxis::EdgeFrequency:
      config.edge_cpu_frequency = value;
      break;
    case SweepAxis::NumDevices:
      config.num_devices = static_cast<int>(value);
      break;
    case SweepAxis::Popularity1: {
      const double rest = 1.0 - config.catalog.programs[0].popularity;
      if (rest <= 0.0) {
        throw ConfigError("sweep.axis = popularity1: remaining popularity mass is zero");
      }
      const double scale = (1.0 - value) / rest;
      config.catalog.programs[0].popularity = value;
      for (std::size_t j = 1; j < config.catalog.size(); ++j) {
        config.catalog.programs[j].popularity *= scale;
      }
      break;
    }
  }
  return config;
}

}  // namespace detail

/// Runs the sweep described by the spec: one row per grid point carrying the
/// inputs, delta*, per-program prices and offloading probabilities, the
/// analytic expected profit, and (when a simulation block is present) the
/// empirical estimates with confidence columns. Deterministic for a fixed
/// spec and seed.
inline SweepResult run_sweep(const ExperimentSpec& spec, double tol) {
  const std::size_t n = spec.system.catalog.size();

  SweepResult result;
  result.header = {"axis_value", "num_devices", "edge_cpu_frequency"};
  for (std::size_t j = 0; j < n; ++j) result.header.push_back("price_" + std::to_string(j + 1));
  result.header.push_back("delta_star");
  for (std::size_t j = 0; j < n; ++j) {
    result.header.push_back("offload_prob_" + std::to_string(j + 1));
  }
  for (std::size_t j = 0; j < n; ++j) result.header.push_back("cached_" + std::to_string(j + 1));
  result.header.push_back("expected_profit");
  result.header.push_back("converged");
  if (spec.simulation) {
    for (std::size_t j = 0; j < n; ++j) {
      result.header.push_back("emp_offload_prob_" + std::to_string(j + 1));
    }
    for (std::size_t j = 0; j < n; ++j) {
      result.header.push_back("emp_offload_ci_" + std::to_string(j + 1));
    }
    result.header.push_back("emp_profit");
    result.header.push_back("emp_profit_ci");
    result.header.push_back("emp_m_mean");
  }

  for (std::size_t point = 0; point < spec.grid.size(); ++point) {
    const double value = spec.grid[point];
    const SystemConfig config = detail::apply_axis(spec, value);

    PriceVector prices;
    double delta_star = 0.0;
    std::vector<double> offload_prob;
    std::vector<bool> cached(n, false);
    double profit = 0.0;
    bool converged = true;

    switch (spec.scheme) {
      case PricingScheme::Uniform: {
        const UniformPricingResult r = solve_p2(config, tol);
        prices.assign(n, r.price);
        delta_star = r.delta_star;
        offload_prob.assign(n, r.offload_prob);
        for (std::size_t j = 0; j < n; ++j) cached[j] = r.cache.contains(j);
        profit = r.expected_profit;
        break;
      }
      case PricingScheme::Differentiated: {
        const DiffPricingResult r = solve_p3(config, tol, 500);
        prices = r.prices;
        delta_star = r.delta_star;
        offload_prob = r.offload_prob;
        for (std::size_t j = 0; j < n; ++j) cached[j] = r.cache.contains(j);
        profit = r.expected_profit;
        converged = r.converged;
        break;
      }
      case PricingScheme::FixedPrices: {
        prices = spec.fixed_prices;
        if (spec.axis == SweepAxis::Price1) prices[0] = value;
        const EquilibriumOutcome eq = solve_delta(config, prices);
        delta_star = eq.delta_star;
        offload_prob = eq.offload_prob;
        const double m = static_cast<double>(config.num_devices);
        for (std::size_t j = 0; j < n; ++j) {
          cached[j] = true;
          const Program& p = config.catalog.programs[j];
          profit += eq.offload_prob[j] * p.popularity * m * prices[j] * p.workload - p.cost;
        }
        break;
      }
    }

    std::vector<std::string> row;
    row.push_back(detail::format_number(value));
    row.push_back(std::to_string(config.num_devices));
    row.push_back(detail::format_number(config.edge_cpu_frequency));
    for (std::size_t j = 0; j < n; ++j) row.push_back(detail::format_number(prices[j]));
    row.push_back(detail::format_number(delta_star));
    for (std::size_t j = 0; j < n; ++j) row.push_back(detail::format_number(offload_prob[j]));
    for (std::size_t j = 0; j < n; ++j) row.push_back(cached[j] ? "1" : "0");
    row.push_back(detail::format_number(profit));
    row.push_back(converged ? "1" : "0");

    if (spec.simulation) {
      CacheSet cache;
      cache.selected.assign(n, false);
      for (std::size_t j = 0; j < n; ++j) cache.selected[j] = cached[j];
      const SimulationReport sim =
          estimate_profit(config, prices, cache, spec.simulation->replications,
                          spec.simulation->seed + point, delta_star);
      for (std::size_t j = 0; j < n; ++j) {
        row.push_back(detail::format_number(sim.empirical_offload_prob[j]));
      }
      for (std::size_t j = 0; j < n; ++j) {
        row.push_back(detail::format_number(sim.offload_ci_halfwidth[j]));
      }
      row.push_back(detail::format_number(sim.empirical_profit));
      row.push_back(detail::format_number(sim.profit_ci_halfwidth));
      row.push_back(detail::format_number(sim.m_mean));
    }

    result.rows.push_back(std::move(row));
  }
  return result;
}

/// Writes the sweep as RFC-4180-style CSV plus a JSON metadata sidecar
/// capturing the fully resolved config and solver tolerance. Returns the CSV
/// path.
inline std::filesystem::path write_sweep(const ExperimentSpec& spec, const SweepResult& result,
                                         const std::filesystem::path& out_dir, double tol) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path csv_path = out_dir / (spec.output_name + ".csv");
  const std::filesystem::path meta_path = out_dir / (spec.output_name + ".meta.json");

  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open output file: " + csv_path.string());
  for (std::size_t c = 0; c < result.header.size(); ++c) {
    if (c) csv << ',';
    csv << detail::csv_escape(result.header[c]);
  }
  csv << "\r\n";
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) csv << ',';
      csv << detail::csv_escape(row[c]);
    }
    csv << "\r\n";
  }

  nlohmann::json meta;
  meta["config"] = resolved_config_json(spec);
  meta["solver_tolerance"] = tol;
  meta["columns"] = result.header;
  std::ofstream metaf(meta_path, std::ios::binary);
  metaf << meta.dump(2) << "\n";

  return csv_path;
}

inline std::filesystem::path run_experiment(const ExperimentSpec& spec,
                                            const std::filesystem::path& out_dir, double tol) {
  const SweepResult result = run_sweep(spec, tol);
  return write_sweep(spec, result, out_dir, tol);
}

}  // namespace mecsp
