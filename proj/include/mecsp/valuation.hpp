#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mecsp {

/// Per-cycle valuation of offloading, seconds per CPU cycle.
using SecondsPerCycle = double;

/// Prices per CPU cycle, one entry per program in catalog order.
using PriceVector = std::vector<double>;

/// Prior distribution of a device's private per-cycle valuation.
///
/// Three families are supported: uniform on [lower, upper], normal, and a
/// shifted exponential. All are regular: the virtual value
/// theta - (1 - F(theta)) / f(theta) is nondecreasing, which guarantees
/// unique price roots downstream.
///
/// The normal CDF is evaluated with std::erfc, whose absolute error is below
/// 1e-15, well inside the 1e-10 budget the pricing solvers assume. Outside
/// the effective support (mean +/- 8 sigma for normal, [shift, shift + 40 /
/// rate] for exponential) the CDF is clamped to exactly 0 or 1 so that
/// bisection brackets stay finite and sentinel-priced programs contribute no
/// offloading mass.
class ValuationModel {
 public:
  enum class Kind { Uniform, Normal, Exponential };

  static ValuationModel uniform(double lower, double upper) {
    if (!(lower < upper)) {
      throw std::invalid_argument("ValuationModel::uniform: lower must be < upper");
    }
    return ValuationModel(Kind::Uniform, lower, upper);
  }

  static ValuationModel normal(double mean, double stddev) {
    if (!(stddev > 0.0)) {
      throw std::invalid_argument("ValuationModel::normal: stddev must be > 0");
    }
    return ValuationModel(Kind::Normal, mean, stddev);
  }

  /// Exponential with given rate, shifted so the support starts at `shift`.
  /// The shift keeps negative valuations representable (devices whose upload
  /// takes longer than local execution).
  static ValuationModel exponential(double rate, double shift) {
    if (!(rate > 0.0)) {
      throw std::invalid_argument("ValuationModel::exponential: rate must be > 0");
    }
    return ValuationModel(Kind::Exponential, shift, rate);
  }

  Kind kind() const { return kind_; }

  // Raw parameters, meaning depends on kind.
  double param1() const { return p1_; }  // lower / mean / shift
  double param2() const { return p2_; }  // upper / stddev / rate

  double pdf(double theta) const {
    switch (kind_) {
      case Kind::Uniform:
        return (theta >= p1_ && theta <= p2_) ? 1.0 / (p2_ - p1_) : 0.0;
      case Kind::Normal: {
        const double z = (theta - p1_) / p2_;
        return std::exp(-0.5 * z * z) / (p2_ * std::sqrt(2.0 * std::numbers::pi));
      }
      case Kind::Exponential:
        return theta >= p1_ ? p2_ * std::exp(-p2_ * (theta - p1_)) : 0.0;
    }
    return 0.0;
  }

  double cdf(double theta) const {
    if (theta <= support_lower()) return 0.0;
    if (theta >= support_upper()) return 1.0;
    switch (kind_) {
      case Kind::Uniform:
        return (theta - p1_) / (p2_ - p1_);
      case Kind::Normal: {
        const double z = (theta - p1_) / p2_;
        return 0.5 * std::erfc(-z / std::numbers::sqrt2);
      }
      case Kind::Exponential:
        return 1.0 - std::exp(-p2_ * (theta - p1_));
    }
    return 0.0;
  }

  /// 1 - F(theta), computed without the cancellation that 1.0 - cdf(theta)
  /// suffers in the upper tail. The virtual value and the regularity check
  /// need the relative accuracy; absolute-tolerance price solvers do not.
  double survival(double theta) const {
    if (theta <= support_lower()) return 1.0;
    if (theta >= support_upper()) return 0.0;
    switch (kind_) {
      case Kind::Uniform:
        return (p2_ - theta) / (p2_ - p1_);
      case Kind::Normal: {
        const double z = (theta - p1_) / p2_;
        return 0.5 * std::erfc(z / std::numbers::sqrt2);
      }
      case Kind::Exponential:
        return std::exp(-p2_ * (theta - p1_));
    }
    return 0.0;
  }

  /// Inverse CDF, u in [0, 1]. Used by the simulator for deterministic
  /// counter-based sampling.
  double quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) {
      throw std::invalid_argument("ValuationModel::quantile: u outside [0,1]");
    }
    switch (kind_) {
      case Kind::Uniform:
        return p1_ + u * (p2_ - p1_);
      case Kind::Normal:
        return p1_ + p2_ * standard_normal_quantile(u);
      case Kind::Exponential:
        return u >= 1.0 ? support_upper() : p1_ - std::log1p(-u) / p2_;
    }
    return 0.0;
  }

  /// Lower end of the effective support (finite even for unbounded families).
  double support_lower() const {
    switch (kind_) {
      case Kind::Uniform:
        return p1_;
      case Kind::Normal:
        return p1_ - 8.0 * p2_;
      case Kind::Exponential:
        return p1_;
    }
    return 0.0;
  }

  /// Upper end of the effective support; also the sentinel price for
  /// uncached programs (F(delta + sentinel) = 1 for any delta > 0).
  double support_upper() const {
    switch (kind_) {
      case Kind::Uniform:
        return p2_;
      case Kind::Normal:
        return p1_ + 8.0 * p2_;
      case Kind::Exponential:
        return p1_ + 40.0 / p2_;
    }
    return 0.0;
  }

  double support_width() const { return support_upper() - support_lower(); }

  double sentinel_price() const { return support_upper(); }

  double mean() const {
    switch (kind_) {
      case Kind::Uniform:
        return 0.5 * (p1_ + p2_);
      case Kind::Normal:
        return p1_;
      case Kind::Exponential:
        return p1_ + 1.0 / p2_;
    }
    return 0.0;
  }

  double variance() const {
    switch (kind_) {
      case Kind::Uniform:
        return (p2_ - p1_) * (p2_ - p1_) / 12.0;
      case Kind::Normal:
        return p2_ * p2_;
      case Kind::Exponential:
        return 1.0 / (p2_ * p2_);
    }
    return 0.0;
  }

  /// Virtual value theta - (1 - F(theta)) / f(theta).
  double virtual_value(double theta) const {
    const double f = pdf(theta);
    if (f <= 0.0) {
      throw std::domain_error("virtual_value: pdf is zero at requested point");
    }
    return theta - survival(theta) / f;
  }

 private:
  static double standard_normal_quantile(double u);

  ValuationModel(Kind kind, double p1, double p2) : kind_(kind), p1_(p1), p2_(p2) {}

  Kind kind_;
  double p1_;
  double p2_;
};

/// Acklam's rational approximation (~1.15e-9 relative) followed by one
/// Halley refinement step, which brings the result to machine precision.
inline double ValuationModel::standard_normal_quantile(double u) {
  if (u <= 0.0) return -8.0;
  if (u >= 1.0) return 8.0;

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - plow) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley step against Phi(x) - u.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  const double w = e / pdf;
  x -= w / (1.0 + 0.5 * x * w);
  return x;
}

/// One service program the base station may cache.
struct Program {
  double popularity = 0.0;  // q_j, request probability
  double workload = 0.0;    // L_j, CPU cycles per task
  double size = 0.0;        // c_j, storage units
  double cost = 0.0;        // r_j, acquisition cost, profit units
};

/// The catalog of programs plus the caching capacity.
struct ProgramCatalog {
  std::vector<Program> programs;
  double capacity = 0.0;     // C, storage units
  double granularity = 1.0;  // storage granularity used to scale weights to integers

  std::size_t size() const { return programs.size(); }

  /// Throws std::invalid_argument describing the first violated constraint.
  /// Popularities must sum to 1 within 1e-12; out-of-tolerance catalogs are
  /// rejected rather than renormalized.
  void validate() const {
    if (programs.empty()) {
      throw std::invalid_argument("catalog: at least one program required");
    }
    double qsum = 0.0;
    for (std::size_t j = 0; j < programs.size(); ++j) {
      const Program& p = programs[j];
      const std::string where = "catalog.programs[" + std::to_string(j) + "]";
      if (p.popularity < 0.0) throw std::invalid_argument(where + ".popularity must be >= 0");
      if (!(p.workload > 0.0)) throw std::invalid_argument(where + ".workload must be > 0");
      if (!(p.size > 0.0)) throw std::invalid_argument(where + ".size must be > 0");
      if (p.cost < 0.0) throw std::invalid_argument(where + ".cost must be >= 0");
      qsum += p.popularity;
    }
    if (std::abs(qsum - 1.0) > 1e-12) {
      throw std::invalid_argument("catalog.programs[].popularity must sum to 1 within 1e-12, got " +
                                  std::to_string(qsum));
    }
    if (capacity < 0.0) throw std::invalid_argument("catalog.capacity must be >= 0");
    if (!(granularity > 0.0)) throw std::invalid_argument("catalog.granularity must be > 0");
  }
};

/// CDF of beta = theta - pi_phi, the price-adjusted valuation, mixed over
/// program types: G(beta) = sum_j q_j F(beta + pi_j).
inline double mixture_cdf(const ValuationModel& model, const ProgramCatalog& catalog,
                          const PriceVector& prices, double beta) {
  if (prices.size() != catalog.size()) {
    throw std::invalid_argument("mixture_cdf: prices must have one entry per program");
  }
  double g = 0.0;
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    g += catalog.programs[j].popularity * model.cdf(beta + prices[j]);
  }
  return g;
}

/// Checks Assumption-style regularity numerically: the virtual value must be
/// nondecreasing across a grid spanning the effective support. Throws if the
/// pdf vanishes on an interior grid point (the virtual value is undefined
/// there). Used as a guard before any pricing optimization.
inline bool check_regularity(const ValuationModel& model, std::size_t grid_size) {
  if (grid_size < 2) {
    throw std::invalid_argument("check_regularity: grid_size must be >= 2");
  }
  const double lo = model.support_lower();
  const double width = model.support_width();
  const double slack = 1e-9 * width;  // absorbs roundoff on flat stretches

  double prev = 0.0;
  bool have_prev = false;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double theta = lo + (static_cast<double>(i) + 0.5) / static_cast<double>(grid_size) * width;
    const double f = model.pdf(theta);
    if (f <= 0.0) {
      throw std::domain_error("check_regularity: pdf vanishes inside the effective support");
    }
    const double y = theta - model.survival(theta) / f;
    if (have_prev && y < prev - slack) return false;
    prev = y;
    have_prev = true;
  }
  return true;
}

}  // namespace mecsp
