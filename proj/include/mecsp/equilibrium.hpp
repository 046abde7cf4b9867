#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mecsp/valuation.hpp"

namespace mecsp {

/// Exogenous parameters of the game.
struct SystemConfig {
  int num_devices = 0;               // M
  double edge_cpu_frequency = 0.0;   // f^c, cycles per second
  ProgramCatalog catalog;
  ValuationModel valuation = ValuationModel::uniform(-1.0, 1.0);

  void validate() const {
    if (num_devices < 1) throw std::invalid_argument("system.num_devices must be >= 1");
    if (!(edge_cpu_frequency > 0.0)) {
      throw std::invalid_argument("system.edge_cpu_frequency must be > 0");
    }
    catalog.validate();
  }

  /// Price assigned to uncached programs. Devices requesting them never
  /// offload, yet their popularity mass still enters the mixture CDF.
  double sentinel_price() const { return valuation.sentinel_price(); }
};

/// Stage-II equilibrium: the common congestion term delta* plus per-program
/// offloading probabilities. A device offloads iff theta >= pi_phi + delta*.
struct EquilibriumOutcome {
  double delta_star = 0.0;                 // s/cycle, in [1/f^c, M/f^c]
  std::vector<double> offload_prob;        // 1 - F(delta* + pi_j) per program
  double residual = 0.0;                   // Phi(delta_star)
  double expected_offloaders = 0.0;        // M * sum_j q_j * offload_prob_j
};

inline double default_delta_tolerance(const SystemConfig& config) {
  return 1e-14 * (config.num_devices / config.edge_cpu_frequency);
}

/// The equilibrium residual Phi(delta) = delta - ((M-1)(1 - G(delta)) + 1) / f^c.
/// Strictly increasing in delta; its unique root is delta*.
inline double phi(const SystemConfig& config, const PriceVector& prices, double delta) {
  const double g = mixture_cdf(config.valuation, config.catalog, prices, delta);
  const double m = static_cast<double>(config.num_devices);
  return delta - ((m - 1.0) * (1.0 - g) + 1.0) / config.edge_cpu_frequency;
}

/// Bisection for delta* on [1/f^c, M/f^c]. Bisection is preferred over
/// Newton: Phi is monotone but its derivative is flat wherever the valuation
/// pdf vanishes. Fails only if the bracket carries no sign change beyond
/// tolerance, which signals a corrupted model.
inline EquilibriumOutcome solve_delta(const SystemConfig& config, const PriceVector& prices,
                                      double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_delta: tol must be > 0");
  const double fc = config.edge_cpu_frequency;
  const double m = static_cast<double>(config.num_devices);
  double lo = 1.0 / fc;
  double hi = m / fc;

  double phi_lo = phi(config, prices, lo);
  double phi_hi = phi(config, prices, hi);
  // Phi(1/f^c) <= 0 <= Phi(M/f^c) holds analytically; the guard only trips
  // on a corrupted model. Its threshold is floored at the roundoff scale of
  // Phi so that very tight solve tolerances cannot trigger it spuriously.
  const double guard = std::max(tol, 1e-12 * m / fc);
  if (phi_lo > guard || phi_hi < -guard) {
    throw std::runtime_error("solve_delta: Phi has no sign change on [1/f^c, M/f^c]");
  }

  double delta = lo;
  double residual = phi_lo;
  if (std::abs(phi_hi) < std::abs(residual)) {
    delta = hi;
    residual = phi_hi;
  }
  for (int it = 0; it < 200 && std::abs(residual) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted at double precision
    const double phi_mid = phi(config, prices, mid);
    if (std::abs(phi_mid) <= std::abs(residual)) {
      delta = mid;
      residual = phi_mid;
    }
    if (phi_mid < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  EquilibriumOutcome out;
  out.delta_star = delta;
  out.residual = residual;
  out.offload_prob.resize(config.catalog.size());
  double mass = 0.0;
  for (std::size_t j = 0; j < config.catalog.size(); ++j) {
    out.offload_prob[j] = 1.0 - config.valuation.cdf(delta + prices[j]);
    mass += config.catalog.programs[j].popularity * out.offload_prob[j];
  }
  out.expected_offloaders = m * mass;
  return out;
}

inline EquilibriumOutcome solve_delta(const SystemConfig& config, const PriceVector& prices) {
  return solve_delta(config, prices, default_delta_tolerance(config));
}

/// Closed-form delta* for a uniform valuation and one common price pi,
/// clamped to [1/f^c, M/f^c]:
///   M/f^c                      if pi < lower - M/f^c
///   ((M-1)(upper - pi) + W) / (W f^c + M - 1)   on the middle branch
///   1/f^c                      if pi > upper - 1/f^c
/// with W the support width.
inline double delta_closed_form_uniform(const SystemConfig& config, double pi) {
  if (config.valuation.kind() != ValuationModel::Kind::Uniform) {
    throw std::invalid_argument("delta_closed_form_uniform: valuation must be uniform");
  }
  const double lower = config.valuation.param1();
  const double upper = config.valuation.param2();
  const double width = upper - lower;
  const double fc = config.edge_cpu_frequency;
  const double m = static_cast<double>(config.num_devices);

  double delta;
  if (pi < lower - m / fc) {
    delta = m / fc;
  } else if (pi > upper - 1.0 / fc) {
    delta = 1.0 / fc;
  } else {
    delta = ((m - 1.0) * (upper - pi) + width) / (width * fc + (m - 1.0));
  }
  return std::clamp(delta, 1.0 / fc, m / fc);
}

/// d(delta*)/d(pi_j) by the implicit function theorem:
///   -(M-1) q_j f(delta* + pi_j) / (f^c + (M-1) sum_k q_k f(delta* + pi_k)).
/// Always in (-1, 0].
inline double delta_price_sensitivity(const SystemConfig& config, const PriceVector& prices,
                                      std::size_t j) {
  if (j >= config.catalog.size()) {
    throw std::out_of_range("delta_price_sensitivity: program index out of range");
  }
  const EquilibriumOutcome eq = solve_delta(config, prices);
  const double m = static_cast<double>(config.num_devices);
  double denom = config.edge_cpu_frequency;
  for (std::size_t k = 0; k < config.catalog.size(); ++k) {
    denom += (m - 1.0) * config.catalog.programs[k].popularity *
             config.valuation.pdf(eq.delta_star + prices[k]);
  }
  const double num = (m - 1.0) * config.catalog.programs[j].popularity *
                     config.valuation.pdf(eq.delta_star + prices[j]);
  return -num / denom;
}

/// Finite-difference estimates of the comparative statics of the decision
/// threshold delta* + pi_j:
///   own: d(delta* + pi_j)/d(pi_j)      (expected > 0)
///   cross: d(delta* + pi_j)/d(pi_k)    (expected < 0 for k != j with q_k > 0)
///   frequency: d(delta*)/d(f^c)        (expected < 0)
///   devices: delta*(M+1) - delta*(M)   (expected > 0; M is discrete)
struct ThresholdSensitivityReport {
  double own = 0.0;
  double cross = 0.0;  // NaN when the catalog has a single program
  double frequency = 0.0;
  double devices = 0.0;
};

inline ThresholdSensitivityReport threshold_monotonicity_report(const SystemConfig& config,
                                                                const PriceVector& prices) {
  const double scale = config.valuation.support_width();
  const double h = 1e-4 * scale;
  const std::size_t j = 0;

  auto delta_at = [&](const PriceVector& p) { return solve_delta(config, p).delta_star; };

  ThresholdSensitivityReport report;

  PriceVector up = prices, dn = prices;
  up[j] += h;
  dn[j] -= h;
  report.own = (delta_at(up) + up[j] - delta_at(dn) - dn[j]) / (2.0 * h);

  if (config.catalog.size() > 1) {
    std::size_t k = 1;
    for (std::size_t c = 1; c < config.catalog.size(); ++c) {
      if (config.catalog.programs[c].popularity > 0.0) {
        k = c;
        break;
      }
    }
    up = prices;
    dn = prices;
    up[k] += h;
    dn[k] -= h;
    report.cross = (delta_at(up) - delta_at(dn)) / (2.0 * h);
  } else {
    report.cross = std::nan("");
  }

  const double hf = 1e-4 * config.edge_cpu_frequency;
  SystemConfig cf_up = config, cf_dn = config;
  cf_up.edge_cpu_frequency += hf;
  cf_dn.edge_cpu_frequency -= hf;
  report.frequency =
      (solve_delta(cf_up, prices).delta_star - solve_delta(cf_dn, prices).delta_star) / (2.0 * hf);

  SystemConfig cm = config;
  cm.num_devices += 1;
  report.devices = solve_delta(cm, prices).delta_star - solve_delta(config, prices).delta_star;

  return report;
}

}  // namespace mecsp
