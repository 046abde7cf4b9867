#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mecsp/caching.hpp"
#include "mecsp/equilibrium.hpp"
#include "mecsp/pricing_uniform.hpp"
#include "mecsp/valuation.hpp"

namespace mecsp {

/// Result of the differentiated-pricing stage for one cache set (or, from
/// solve_p3, for the best cache found by enumeration).
struct DiffPricingResult {
  PriceVector prices;                    // sentinel on uncached programs
  double delta_star = 0.0;
  std::vector<double> offload_prob;      // per program
  double expected_profit = 0.0;
  int iterations = 0;
  double max_residual = 0.0;             // worst price-units stationarity gap, see below
  bool converged = false;
  CacheSet cache;
};

namespace detail {

inline void require_cached(const std::vector<std::size_t>& cached_set, std::size_t j) {
  if (std::find(cached_set.begin(), cached_set.end(), j) == cached_set.end()) {
    throw std::invalid_argument("program is not in the cached set");
  }
}

}  // namespace detail

/// The per-program stationarity residual of differentiated pricing, with the
/// congestion term supplied explicitly (the alternating algorithm holds it
/// fixed during each inner price search):
///   omega_d(pi_j) = q_j M L_j { (f^c + (M-1) S_-j) [ (1-F_j)/f_j - pi_j ]
///                                + (M-1) q_j (1-F_j) }
///                   + (M-1) q_j sum_{k != j} f_k q_k M pi_k L_k,
/// where S_-j = sum_{k != j, cached} q_k f(delta + pi_k) and F_j, f_j are
/// evaluated at delta + pi_j. Decreasing in pi_j for regular valuations.
inline double omega_d_at(const SystemConfig& config, const std::vector<std::size_t>& cached_set,
                         const PriceVector& prices, std::size_t j, double delta) {
  detail::require_cached(cached_set, j);
  if (prices.size() != config.catalog.size()) {
    throw std::invalid_argument("omega_d: prices must have one entry per program");
  }
  const ValuationModel& v = config.valuation;
  const double m = static_cast<double>(config.num_devices);
  const double q_j = config.catalog.programs[j].popularity;
  const double l_j = config.catalog.programs[j].workload;

  double density_others = 0.0;  // S_-j
  double cross = 0.0;
  for (const std::size_t k : cached_set) {
    if (k == j) continue;
    const double q_k = config.catalog.programs[k].popularity;
    const double l_k = config.catalog.programs[k].workload;
    const double f_k = v.pdf(delta + prices[k]);
    density_others += q_k * f_k;
    cross += f_k * q_k * m * prices[k] * l_k;
  }

  const double coef = config.edge_cpu_frequency + (m - 1.0) * density_others;
  const double survival = 1.0 - v.cdf(delta + prices[j]);
  const double density = v.pdf(delta + prices[j]);
  double hazard;
  if (density > 0.0) {
    hazard = survival / density;
  } else if (survival <= 0.0) {
    hazard = 0.0;
  } else {
    throw std::runtime_error("omega_d: pdf vanishes while survival mass remains (model error)");
  }

  return q_j * m * l_j * (coef * (hazard - prices[j]) + (m - 1.0) * q_j * survival) +
         (m - 1.0) * q_j * cross;
}

/// omega_d with delta* recomputed fresh for the supplied prices.
inline double omega_d(const SystemConfig& config, const std::vector<std::size_t>& cached_set,
                      const PriceVector& prices, std::size_t j) {
  const EquilibriumOutcome eq = solve_delta(config, prices);
  return omega_d_at(config, cached_set, prices, j, eq.delta_star);
}

/// Normalization that maps omega_d into price units: dividing by
/// q_j M L_j (f^c + (M-1) S_-j) turns the residual into the gap of the
/// fixed-point form pi_j = (1-F_j)/f_j + ..., so residual certificates can be
/// compared against price-scale tolerances.
inline double omega_d_price_scale(const SystemConfig& config,
                                  const std::vector<std::size_t>& cached_set,
                                  const PriceVector& prices, std::size_t j, double delta) {
  const ValuationModel& v = config.valuation;
  const double m = static_cast<double>(config.num_devices);
  double density_others = 0.0;
  for (const std::size_t k : cached_set) {
    if (k == j) continue;
    density_others += config.catalog.programs[k].popularity * v.pdf(delta + prices[k]);
  }
  const double q_j = config.catalog.programs[j].popularity;
  const double l_j = config.catalog.programs[j].workload;
  return q_j * m * l_j * (config.edge_cpu_frequency + (m - 1.0) * density_others);
}

/// Unique root of omega_d(pi_j) = 0 with the other prices and the supplied
/// congestion term held fixed, by bisection. The upper bracket starts at the
/// sentinel price and doubles until the (decreasing) residual turns negative.
inline double best_response_price(const SystemConfig& config,
                                  const std::vector<std::size_t>& cached_set,
                                  const PriceVector& prices_others, std::size_t j, double delta,
                                  double tol) {
  detail::require_cached(cached_set, j);
  PriceVector prices = prices_others;

  prices[j] = 0.0;
  double w_lo = omega_d_at(config, cached_set, prices, j, delta);
  if (w_lo <= 0.0) return 0.0;

  double lo = 0.0;
  double hi = config.sentinel_price();
  prices[j] = hi;
  double w_hi = omega_d_at(config, cached_set, prices, j, delta);
  for (int grow = 0; grow < 64 && w_hi > 0.0; ++grow) {
    lo = hi;
    hi *= 2.0;
    prices[j] = hi;
    w_hi = omega_d_at(config, cached_set, prices, j, delta);
  }
  if (w_hi > 0.0) {
    throw std::runtime_error("best_response_price: failed to bracket the root");
  }

  double pi = hi;
  double best = w_hi;
  const double scale = omega_d_price_scale(config, cached_set, prices, j, delta);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    prices[j] = mid;
    const double w = omega_d_at(config, cached_set, prices, j, delta);
    if (std::abs(w) <= std::abs(best)) {
      best = w;
      pi = mid;
    }
    if (std::abs(w) <= tol * scale && hi - lo <= 1e-13 * config.sentinel_price()) break;
    if (w > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return pi;
}

/// Alternating per-program bisection for the differentiated prices on a
/// fixed cache set. Each sweep recomputes every cached price against the
/// previous iterate's prices and congestion term, then refreshes delta*.
/// Terminates when the largest price change falls below `tol`; reports
/// non-convergence explicitly via `converged` rather than returning silently.
inline DiffPricingResult solve_algorithm2(const SystemConfig& config,
                                          const std::vector<std::size_t>& cached_set,
                                          const PriceVector& init_prices, double tol,
                                          int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_algorithm2: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("solve_algorithm2: max_iter must be >= 1");
  if (init_prices.size() != config.catalog.size()) {
    throw std::invalid_argument("solve_algorithm2: init_prices must match catalog size");
  }
  double cache_weight = 0.0;
  for (const std::size_t j : cached_set) {
    if (j >= config.catalog.size()) {
      throw std::out_of_range("solve_algorithm2: cached program index out of range");
    }
    cache_weight += config.catalog.programs[j].size;
  }
  if (cache_weight > config.catalog.capacity + 1e-12 * std::max(1.0, config.catalog.capacity)) {
    throw std::invalid_argument("solve_algorithm2: cached set violates the capacity constraint");
  }

  const double sentinel = config.sentinel_price();
  PriceVector prices(config.catalog.size(), sentinel);
  for (const std::size_t j : cached_set) prices[j] = init_prices[j];

  DiffPricingResult result;
  double delta = solve_delta(config, prices).delta_star;

  for (int t = 1; t <= max_iter; ++t) {
    PriceVector next = prices;
    for (const std::size_t j : cached_set) {
      next[j] = best_response_price(config, cached_set, prices, j, delta, tol);
    }
    double change = 0.0;
    for (const std::size_t j : cached_set) {
      change = std::max(change, std::abs(next[j] - prices[j]));
    }
    prices = std::move(next);
    delta = solve_delta(config, prices).delta_star;
    result.iterations = t;
    if (change <= tol) {
      result.converged = true;
      break;
    }
  }

  // Tight final solve: the threshold enters the reported profit first-order.
  const EquilibriumOutcome eq =
      solve_delta(config, prices, 1e-4 * default_delta_tolerance(config));
  result.prices = prices;
  result.delta_star = eq.delta_star;
  result.offload_prob = eq.offload_prob;
  result.cache.selected.assign(config.catalog.size(), false);

  const double m = static_cast<double>(config.num_devices);
  double profit = 0.0;
  double residual = 0.0;
  for (const std::size_t j : cached_set) {
    const Program& p = config.catalog.programs[j];
    result.cache.selected[j] = true;
    result.cache.total_weight += p.size;
    profit += eq.offload_prob[j] * p.popularity * m * prices[j] * p.workload - p.cost;
    const double scale = omega_d_price_scale(config, cached_set, prices, j, eq.delta_star);
    residual = std::max(residual,
                        std::abs(omega_d_at(config, cached_set, prices, j, eq.delta_star)) / scale);
  }
  result.expected_profit = profit;
  result.cache.total_value = profit;
  result.max_residual = residual;
  return result;
}

inline double default_diff_tolerance(const SystemConfig& config) {
  return 1e-14 * config.sentinel_price();
}

/// Warm start for Algorithm 2: the uniform-price solution replicated across
/// the cached programs.
inline PriceVector warm_start_prices(const SystemConfig& config, double tol) {
  const double pi = solve_uniform_price(config, tol);
  return PriceVector(config.catalog.size(), pi);
}

inline DiffPricingResult solve_algorithm2(const SystemConfig& config,
                                          const std::vector<std::size_t>& cached_set) {
  const double tol = default_diff_tolerance(config);
  return solve_algorithm2(config, cached_set, warm_start_prices(config, tol), tol, 500);
}

/// Common price for cached programs of equal workload (the equal-workload
/// collapse): solves
///   pi - (1-F(t))/f(t) - (M-1) (sum_{j cached} q_j) (1-F(t)) / f^c = 0
/// with t = delta*(pi) + pi, uncached programs at the sentinel.
inline double equal_workload_price(const SystemConfig& config,
                                   const std::vector<std::size_t>& cached_set, double tol) {
  if (cached_set.empty()) {
    throw std::invalid_argument("equal_workload_price: cached set must be nonempty");
  }
  const double l0 = config.catalog.programs[cached_set.front()].workload;
  double mass = 0.0;
  for (const std::size_t j : cached_set) {
    const Program& p = config.catalog.programs[j];
    if (std::abs(p.workload - l0) > 1e-12 * l0) {
      throw std::invalid_argument("equal_workload_price: cached workloads must be equal");
    }
    mass += p.popularity;
  }

  const double sentinel = config.sentinel_price();
  const double m = static_cast<double>(config.num_devices);
  auto residual = [&](double pi) {
    PriceVector prices(config.catalog.size(), sentinel);
    for (const std::size_t j : cached_set) prices[j] = pi;
    const EquilibriumOutcome eq = solve_delta(config, prices);
    const double t = eq.delta_star + pi;
    const double survival = 1.0 - config.valuation.cdf(t);
    const double density = config.valuation.pdf(t);
    if (density <= 0.0) {
      if (survival > 0.0) {
        throw std::runtime_error("equal_workload_price: pdf vanishes on the survival region");
      }
      return pi;
    }
    return pi - survival / density - (m - 1.0) * mass * survival / config.edge_cpu_frequency;
  };

  double lo = 0.0;
  double hi = sentinel;
  if (residual(lo) >= 0.0) return lo;
  double pi = hi;
  double best = residual(hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double w = residual(mid);
    if (std::abs(w) <= std::abs(best)) {
      best = w;
      pi = mid;
    }
    if (std::abs(w) <= tol && hi - lo <= 1e-13 * sentinel) break;
    if (w < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return pi;
}

/// Closed-form stationary prices for two cached programs under a uniform
/// valuation. Returns (pi_j*, pi_k*).
inline std::pair<double, double> two_program_closed_form(double theta_lower, double theta_upper,
                                                         double edge_cpu_frequency, int num_devices,
                                                         double q_j, double q_k, double l_j,
                                                         double l_k) {
  const double width = theta_upper - theta_lower;
  if (!(width > 0.0)) {
    throw std::invalid_argument("two_program_closed_form: theta_lower must be < theta_upper");
  }
  const double fc = edge_cpu_frequency;
  const double m1 = static_cast<double>(num_devices) - 1.0;

  const double a = fc * theta_upper * width + m1 * (q_j + q_k) * width -
                   (m1 * (q_j + q_k) + 1.0) * width;

  const double denom = 4.0 * l_j * l_k *
                           (q_j * q_k * m1 * m1 + fc * width * m1 * (q_j + q_k) +
                            fc * fc * width * width) -
                       q_j * q_k * m1 * m1 * (l_j + l_k) * (l_j + l_k);
  if (std::abs(denom) <= 1e-300 ||
      std::abs(denom) < 1e-12 * 4.0 * l_j * l_k * fc * fc * width * width) {
    throw std::runtime_error("two_program_closed_form: degenerate denominator");
  }

  const double pi_j =
      l_k * (2.0 * l_j * q_j * m1 + 2.0 * l_j * fc * width + q_k * m1 * (l_j + l_k)) * a / denom;
  const double pi_k =
      l_j * (2.0 * l_k * q_k * m1 + 2.0 * l_k * fc * width + q_j * m1 * (l_j + l_k)) * a / denom;
  return {pi_j, pi_k};
}

/// Analytic sign of d(pi_j*)/d(q_j) in the two-program uniform-valuation
/// setting: positive when L_j > L_k; when L_j < L_k, negative iff
/// q_k < 2 f^c (theta_upper - theta_lower) L_j / ((L_k - L_j)(M - 1)).
inline int popularity_sensitivity(double theta_lower, double theta_upper,
                                  double edge_cpu_frequency, int num_devices, double /*q_j*/,
                                  double q_k, double l_j, double l_k) {
  const double width = theta_upper - theta_lower;
  const double m1 = static_cast<double>(num_devices) - 1.0;
  const double a = width * (edge_cpu_frequency * theta_upper - 1.0);
  // Sign of A (M-1)^2 L_k (L_j - L_k)(L_j + L_k) q_k [2 L_j f^c W + (M-1)(L_j - L_k) q_k].
  const double expr =
      a * (l_j - l_k) * q_k * (2.0 * l_j * edge_cpu_frequency * width + m1 * (l_j - l_k) * q_k);
  if (expr > 0.0) return 1;
  if (expr < 0.0) return -1;
  return 0;
}

/// Full differentiated-pricing solve: enumerate capacity-feasible cache
/// sets, run the alternating price algorithm on each, and keep the argmax of
/// the expected profit. Ties break toward the smaller cache, then toward the
/// lexicographically smallest bitmask, so the output is deterministic
/// regardless of evaluation order.
inline DiffPricingResult solve_p3(const SystemConfig& config, double tol, int max_iter) {
  config.validate();
  check_regularity(config.valuation, 1000);
  if (config.catalog.size() > 20) {
    throw std::invalid_argument(
        "solve_p3: enumeration guard exceeded (N must be <= 20); shrink the catalog");
  }

  const PriceVector warm = warm_start_prices(config, tol);
  const std::vector<std::uint32_t> masks =
      enumerate_feasible_subsets(config.catalog, config.catalog.capacity);

  DiffPricingResult best;
  best.prices.assign(config.catalog.size(), config.sentinel_price());
  best.cache.selected.assign(config.catalog.size(), false);
  {
    const EquilibriumOutcome eq = solve_delta(config, best.prices);
    best.delta_star = eq.delta_star;
    best.offload_prob = eq.offload_prob;
    best.expected_profit = 0.0;
    best.converged = true;
  }
  std::uint32_t best_mask = 0;
  std::size_t best_count = 0;

  for (const std::uint32_t mask : masks) {
    if (mask == 0) continue;
    std::vector<std::size_t> cached;
    for (std::size_t j = 0; j < config.catalog.size(); ++j) {
      if (mask & (1u << j)) cached.push_back(j);
    }
    DiffPricingResult candidate = solve_algorithm2(config, cached, warm, tol, max_iter);
    const std::size_t count = cached.size();
    const bool better =
        candidate.expected_profit > best.expected_profit ||
        (candidate.expected_profit == best.expected_profit &&
         (count < best_count || (count == best_count && mask < best_mask)));
    if (better) {
      best = std::move(candidate);
      best_mask = mask;
      best_count = count;
    }
  }
  return best;
}

inline DiffPricingResult solve_p3(const SystemConfig& config) {
  return solve_p3(config, default_diff_tolerance(config), 500);
}

}  // namespace mecsp
