#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mecsp/caching.hpp"
#include "mecsp/equilibrium.hpp"
#include "mecsp/rng.hpp"
#include "mecsp/valuation.hpp"

namespace mecsp {

/// One sampled wireless device. In prior mode only (theta, program) are
/// meaningful and the timing block is synthesized as tau_u = 0,
/// tau_l = theta * L so that cost comparisons stay consistent with the
/// valuation definition theta = (tau_l - tau_u) / L. In physical mode the
/// block is sampled from the configured parameter ranges and theta derived
/// from it.
struct WDSample {
  double theta = 0.0;   // s/cycle
  int program = 0;      // phi_i
  double tau_l = 0.0;   // s, local execution time
  double tau_u = 0.0;   // s, upload time
  double workload = 0.0;  // L, cycles

  // Physical block, populated only in physical mode.
  bool physical = false;
  double input_bits = 0.0;     // I
  double bandwidth = 0.0;      // W, Hz
  double tx_power = 0.0;       // p, W
  double channel_gain = 0.0;   // h
  double noise_power = 0.0;    // sigma^2, W
  double local_cpu = 0.0;      // f_l, cycles/s
};

/// Uniform range for a physical parameter; lo == hi pins a constant.
struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;

  double sample(RandomStream& rng) const {
    return lo == hi ? lo : lo + (hi - lo) * rng.next_u01();
  }
};

/// User-specified distributions for the physical channel/compute model.
struct PhysicalParams {
  ParamRange input_bits;    // I, bits
  ParamRange bandwidth;     // W, Hz
  ParamRange tx_power;      // p, W
  ParamRange channel_gain;  // h
  ParamRange noise_power;   // sigma^2, W
  ParamRange local_cpu;     // f_l, cycles/s

  void validate() const {
    auto positive = [](const ParamRange& r, const char* name) {
      if (!(r.lo > 0.0) || !(r.hi >= r.lo)) {
        throw std::invalid_argument(std::string("physical.") + name +
                                    " must be a positive range with lo <= hi");
      }
    };
    positive(input_bits, "input_bits");
    positive(bandwidth, "bandwidth");
    positive(tx_power, "tx_power");
    positive(channel_gain, "channel_gain");
    positive(noise_power, "noise_power");
    positive(local_cpu, "local_cpu");
  }
};

namespace detail {

inline int sample_program(const ProgramCatalog& catalog, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    acc += catalog.programs[j].popularity;
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(catalog.size()) - 1;
}

inline WDSample sample_device(const SystemConfig& config, const PhysicalParams* physical,
                              RandomStream& rng) {
  WDSample s;
  s.program = sample_program(config.catalog, rng.next_u01());
  s.workload = config.catalog.programs[static_cast<std::size_t>(s.program)].workload;
  if (physical == nullptr) {
    s.theta = config.valuation.quantile(rng.next_u01());
    s.tau_u = 0.0;
    s.tau_l = s.theta * s.workload;
  } else {
    s.physical = true;
    s.input_bits = physical->input_bits.sample(rng);
    s.bandwidth = physical->bandwidth.sample(rng);
    s.tx_power = physical->tx_power.sample(rng);
    s.channel_gain = physical->channel_gain.sample(rng);
    s.noise_power = physical->noise_power.sample(rng);
    s.local_cpu = physical->local_cpu.sample(rng);
    const double rate =
        s.bandwidth * std::log2(1.0 + s.tx_power * s.channel_gain / s.noise_power);
    s.tau_u = s.input_bits / rate;
    s.tau_l = s.workload / s.local_cpu;
    s.theta = (s.tau_l - s.tau_u) / s.workload;
  }
  return s;
}

}  // namespace detail

/// Draws M devices. Device i of replication `replication` owns the random
/// stream (seed, replication * M + i), so output is deterministic for a
/// given seed regardless of worker count.
inline std::vector<WDSample> sample_population(const SystemConfig& config, std::uint64_t seed,
                                               const PhysicalParams* physical = nullptr,
                                               std::uint64_t replication = 0) {
  if (physical != nullptr) physical->validate();
  std::vector<WDSample> population;
  population.reserve(static_cast<std::size_t>(config.num_devices));
  const std::uint64_t base = replication * static_cast<std::uint64_t>(config.num_devices);
  for (int i = 0; i < config.num_devices; ++i) {
    RandomStream rng(seed, base + static_cast<std::uint64_t>(i));
    population.push_back(detail::sample_device(config, physical, rng));
  }
  return population;
}

struct PolicyOutcome {
  std::vector<bool> offload;
  int num_offloaders = 0;  // m
};

/// Plays the equilibrium threshold rule: offload iff theta >= pi_phi + delta
/// (boundary inclusive). Sentinel-priced programs never offload.
inline PolicyOutcome play_threshold_policy(const std::vector<WDSample>& population,
                                           const PriceVector& prices, double delta_star) {
  PolicyOutcome out;
  out.offload.resize(population.size(), false);
  for (std::size_t i = 0; i < population.size(); ++i) {
    const WDSample& s = population[i];
    const double price = prices.at(static_cast<std::size_t>(s.program));
    if (s.theta >= price + delta_star) {
      out.offload[i] = true;
      ++out.num_offloaders;
    }
  }
  return out;
}

/// Realized total cost of one device given the realized number of
/// offloaders m: local runs cost tau_l; offloading costs
/// tau_u + L m / f^c + L pi (payment in time-equivalent units).
inline double realized_cost(const WDSample& sample, bool offload, int m, double price,
                            double edge_cpu_frequency) {
  if (!offload) return sample.tau_l;
  if (m < 1) throw std::invalid_argument("realized_cost: offloading requires m >= 1");
  return sample.tau_u + sample.workload * static_cast<double>(m) / edge_cpu_frequency +
         sample.workload * price;
}

struct DeviationReport {
  double max_gain = 0.0;        // largest Monte Carlo estimated cost saving from deviating, s
  double std_error = 0.0;       // standard error of the estimate at the arg max
  double max_gain_exact = 0.0;  // same quantity with the exact binomial mean of m'
};

/// Verifies the no-profitable-deviation property: over a theta grid per
/// program, compares the expected cost of each action against the threshold
/// rule's choice. Competing offloaders m' ~ Binomial(M-1, 1 - G(delta*)) are
/// sampled once and shared across grid points; the exact binomial mean is
/// reported alongside as the analytic cross-check.
inline DeviationReport deviation_check(const SystemConfig& config, const PriceVector& prices,
                                       double delta_star, std::size_t replications,
                                       std::uint64_t seed, std::size_t grid_points = 100) {
  if (replications < 2) throw std::invalid_argument("deviation_check: replications must be >= 2");
  const double p_all = 1.0 - mixture_cdf(config.valuation, config.catalog, prices, delta_star);
  const std::size_t competitors = static_cast<std::size_t>(config.num_devices - 1);

  double sum = 0.0, sumsq = 0.0;
  for (std::size_t r = 0; r < replications; ++r) {
    RandomStream rng(seed, r);
    int m_prime = 0;
    for (std::size_t i = 0; i < competitors; ++i) {
      if (rng.next_u01() < p_all) ++m_prime;
    }
    sum += m_prime;
    sumsq += static_cast<double>(m_prime) * m_prime;
  }
  const double n = static_cast<double>(replications);
  const double mean_m = sum / n;
  const double var_m = std::max(0.0, sumsq / n - mean_m * mean_m);
  const double se_m = std::sqrt(var_m / n);
  const double exact_m = static_cast<double>(competitors) * p_all;

  DeviationReport report;
  report.max_gain = -std::numeric_limits<double>::infinity();
  report.max_gain_exact = -std::numeric_limits<double>::infinity();

  const double lo = config.valuation.support_lower();
  const double width = config.valuation.support_width();
  const double fc = config.edge_cpu_frequency;
  for (std::size_t j = 0; j < config.catalog.size(); ++j) {
    const double price = prices[j];
    const double l = config.catalog.programs[j].workload;
    for (std::size_t g = 0; g < grid_points; ++g) {
      const double theta =
          lo + (static_cast<double>(g) + 0.5) / static_cast<double>(grid_points) * width;
      const bool offload = theta >= price + delta_star;
      // offload cost minus local cost, per expectation over m'
      const double diff_mc = l * ((mean_m + 1.0) / fc + price - theta);
      const double diff_exact = l * ((exact_m + 1.0) / fc + price - theta);
      const double gain_mc = offload ? diff_mc : -diff_mc;
      const double gain_exact = offload ? diff_exact : -diff_exact;
      if (gain_mc > report.max_gain) {
        report.max_gain = gain_mc;
        report.std_error = l * se_m / fc;
      }
      report.max_gain_exact = std::max(report.max_gain_exact, gain_exact);
    }
  }
  return report;
}

/// Monte Carlo summary of the Stage-II play. CIs are 95% normal
/// approximations; the deviation gain is reported, never clipped.
struct SimulationReport {
  std::size_t replications = 0;
  std::vector<double> empirical_offload_prob;   // per program
  std::vector<double> offload_ci_halfwidth;     // binomial, per program
  double empirical_profit = 0.0;
  double profit_ci_halfwidth = 0.0;
  double empirical_mean_cost = 0.0;             // per device, s
  double m_mean = 0.0;
  double m_variance = 0.0;
};

namespace detail {

/// Kahan compensated accumulator, keeps aggregation deterministic to 1e-12
/// regardless of summation batching.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace detail

/// Replays the threshold policy over `replications` sampled populations and
/// reports the empirical profit sum_i a_i x_phi L_phi pi_phi - sum_j x_j r_j
/// plus per-program offloading frequencies. Deterministic for a fixed
/// (config, seed, replications).
inline SimulationReport estimate_profit(const SystemConfig& config, const PriceVector& prices,
                                        const CacheSet& cache, std::size_t replications,
                                        std::uint64_t seed, double delta_star) {
  if (replications < 2) throw std::invalid_argument("estimate_profit: replications must be >= 2");

  double acquisition = 0.0;
  for (std::size_t j = 0; j < config.catalog.size(); ++j) {
    if (cache.contains(j)) acquisition += config.catalog.programs[j].cost;
  }

  const std::size_t n_programs = config.catalog.size();
  std::vector<std::uint64_t> type_counts(n_programs, 0);
  std::vector<std::uint64_t> offload_counts(n_programs, 0);
  detail::KahanSum profit_sum, profit_sumsq, cost_sum, m_sum, m_sumsq;

  for (std::size_t r = 0; r < replications; ++r) {
    const std::vector<WDSample> population = sample_population(config, seed, nullptr, r);
    const PolicyOutcome play = play_threshold_policy(population, prices, delta_star);
    double revenue = 0.0;
    for (std::size_t i = 0; i < population.size(); ++i) {
      const WDSample& s = population[i];
      const std::size_t j = static_cast<std::size_t>(s.program);
      ++type_counts[j];
      if (play.offload[i]) {
        ++offload_counts[j];
        if (cache.contains(j)) revenue += s.workload * prices[j];
      }
      cost_sum.add(realized_cost(s, play.offload[i], play.num_offloaders, prices[j],
                                 config.edge_cpu_frequency));
    }
    const double profit = revenue - acquisition;
    profit_sum.add(profit);
    profit_sumsq.add(profit * profit);
    m_sum.add(static_cast<double>(play.num_offloaders));
    m_sumsq.add(static_cast<double>(play.num_offloaders) * play.num_offloaders);
  }

  SimulationReport report;
  report.replications = replications;
  const double n = static_cast<double>(replications);
  report.empirical_profit = profit_sum.value() / n;
  const double profit_var =
      std::max(0.0, profit_sumsq.value() / n - report.empirical_profit * report.empirical_profit);
  report.profit_ci_halfwidth = 1.96 * std::sqrt(profit_var / n);
  report.empirical_mean_cost =
      cost_sum.value() / (n * static_cast<double>(config.num_devices));
  report.m_mean = m_sum.value() / n;
  report.m_variance = std::max(0.0, m_sumsq.value() / n - report.m_mean * report.m_mean);

  report.empirical_offload_prob.resize(n_programs, 0.0);
  report.offload_ci_halfwidth.resize(n_programs, 0.0);
  for (std::size_t j = 0; j < n_programs; ++j) {
    if (type_counts[j] == 0) continue;
    const double nj = static_cast<double>(type_counts[j]);
    const double p = static_cast<double>(offload_counts[j]) / nj;
    report.empirical_offload_prob[j] = p;
    report.offload_ci_halfwidth[j] = 1.96 * std::sqrt(p * (1.0 - p) / nj);
  }
  return report;
}

}  // namespace mecsp
