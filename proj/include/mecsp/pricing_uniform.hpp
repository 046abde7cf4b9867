#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mecsp/caching.hpp"
#include "mecsp/equilibrium.hpp"
#include "mecsp/valuation.hpp"

namespace mecsp {

/// Result of the uniform-pricing stage: one price for all programs plus the
/// knapsack caching decision.
struct UniformPricingResult {
  double price = 0.0;          // pi*, s/cycle
  double delta_star = 0.0;     // equilibrium congestion term at pi*
  double offload_prob = 0.0;   // 1 - F(delta* + pi*), common to all programs
  CacheSet cache;
  double expected_profit = 0.0;
  double residual = 0.0;       // omega_u(pi*)
};

/// The uniform-price stationarity residual
///   omega_u(pi) = pi - (1 - F(t)) / f(t) - (M-1)(1 - F(t)) / f^c,
/// with t = delta*(pi) + pi and delta*(pi) solved under equal prices.
/// Increasing in pi; its unique root is the optimal uniform price. The price
/// search is independent of the catalog beyond the popularity mass summing
/// to one, because equal prices collapse the mixture CDF to F.
inline double omega_u(const SystemConfig& config, double pi) {
  if (pi < 0.0) throw std::invalid_argument("omega_u: pi must be >= 0");
  const PriceVector prices(config.catalog.size(), pi);
  // The equilibrium threshold is solved well past its default tolerance:
  // its error enters the price residual directly, and the optimal price can
  // sit orders of magnitude below the sentinel scale.
  const EquilibriumOutcome eq =
      solve_delta(config, prices, 1e-4 * default_delta_tolerance(config));
  const double t = eq.delta_star + pi;
  const double survival = 1.0 - config.valuation.cdf(t);
  const double density = config.valuation.pdf(t);
  if (density <= 0.0) {
    if (survival > 0.0) {
      throw std::runtime_error("omega_u: pdf vanishes while survival mass remains (model error)");
    }
    return pi;  // both survival terms vanish
  }
  const double m = static_cast<double>(config.num_devices);
  return pi - survival / density - (m - 1.0) * survival / config.edge_cpu_frequency;
}

/// Bisection for the root of omega_u on [0, sentinel]: beyond the sentinel
/// price the offloading probability is identically zero and omega_u(pi) = pi.
inline double solve_uniform_price(const SystemConfig& config, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_uniform_price: tol must be > 0");
  double lo = 0.0;
  double hi = config.sentinel_price();
  if (!(hi > 0.0)) {
    throw std::runtime_error("solve_uniform_price: sentinel price is not positive; "
                             "no device would ever offload");
  }

  double w_lo = omega_u(config, lo);
  if (w_lo >= 0.0) return lo;

  double pi = hi;
  double best = omega_u(config, hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double w = omega_u(config, mid);
    if (std::abs(w) <= std::abs(best)) {
      best = w;
      pi = mid;
    }
    if (std::abs(w) <= tol && hi - lo <= 1e-13 * config.sentinel_price()) break;
    if (w < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return pi;
}

inline double default_price_tolerance(const SystemConfig& config) {
  return 1e-14 * config.sentinel_price();
}

/// Closed form for uniform valuations: pi* = upper/2 - 1/(2 f^c).
/// Requires upper > 1/f^c, otherwise no device would ever offload.
inline double uniform_price_closed_form(double theta_upper, double edge_cpu_frequency) {
  if (!(edge_cpu_frequency > 0.0)) {
    throw std::invalid_argument("uniform_price_closed_form: f^c must be > 0");
  }
  if (!(theta_upper > 1.0 / edge_cpu_frequency)) {
    throw std::invalid_argument(
        "uniform_price_closed_form: requires theta_upper > 1/f^c (no one would ever offload)");
  }
  return 0.5 * theta_upper - 0.5 / edge_cpu_frequency;
}

/// Full uniform-pricing solve: price first (decoupled from caching), then
/// the knapsack over net per-program values
///   v_j - r_j with v_j = (1 - F(delta* + pi*)) pi* L_j q_j M.
inline UniformPricingResult solve_p2(const SystemConfig& config, double tol) {
  config.validate();
  check_regularity(config.valuation, 1000);

  UniformPricingResult result;
  result.price = solve_uniform_price(config, tol);
  result.residual = omega_u(config, result.price);

  const PriceVector prices(config.catalog.size(), result.price);
  // Tight final solve: the threshold enters the reported profit first-order.
  const EquilibriumOutcome eq =
      solve_delta(config, prices, 1e-4 * default_delta_tolerance(config));
  result.delta_star = eq.delta_star;
  result.offload_prob = 1.0 - config.valuation.cdf(eq.delta_star + result.price);

  std::vector<KnapsackItem> items;
  items.reserve(config.catalog.size());
  const double m = static_cast<double>(config.num_devices);
  for (std::size_t j = 0; j < config.catalog.size(); ++j) {
    const Program& p = config.catalog.programs[j];
    const double gross = result.offload_prob * result.price * p.workload * p.popularity * m;
    items.push_back({gross - p.cost, p.size, static_cast<int>(j)});
  }
  result.cache = knapsack_01(items, config.catalog.capacity, config.catalog.granularity);
  result.expected_profit = result.cache.total_value;
  return result;
}

inline UniformPricingResult solve_p2(const SystemConfig& config) {
  return solve_p2(config, default_price_tolerance(config));
}

}  // namespace mecsp
