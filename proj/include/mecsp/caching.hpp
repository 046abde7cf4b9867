#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mecsp/valuation.hpp"

namespace mecsp {

/// One candidate program for the knapsack step. `value` is the net expected
/// profit of caching it (revenue minus acquisition cost); `weight` its
/// storage size.
struct KnapsackItem {
  double value = 0.0;
  double weight = 0.0;
  int index = 0;  // program id, must be unique
};

/// A caching decision: which programs are stored, plus the totals.
struct CacheSet {
  std::vector<bool> selected;
  double total_weight = 0.0;
  double total_value = 0.0;

  bool contains(std::size_t j) const { return j < selected.size() && selected[j]; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
  }
};

namespace detail {

inline std::int64_t scale_to_integer(double weight, double granularity, const char* what) {
  const double scaled = weight / granularity;
  const double rounded = std::round(scaled);
  if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, std::abs(scaled))) {
    throw std::invalid_argument(std::string(what) +
                                ": weight is not an integer multiple of the storage granularity");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace detail

/// Exact 0/1 knapsack by dynamic programming over integer-scaled capacity.
/// Items with nonpositive value are never selected. The result is invariant
/// to input order: items are processed in ascending `index`.
inline CacheSet knapsack_01(const std::vector<KnapsackItem>& items, double capacity,
                            double granularity = 1.0) {
  if (capacity < 0.0) throw std::invalid_argument("knapsack_01: capacity must be >= 0");
  if (!(granularity > 0.0)) throw std::invalid_argument("knapsack_01: granularity must be > 0");

  std::size_t max_index = 0;
  for (const KnapsackItem& item : items) {
    if (item.index < 0) throw std::invalid_argument("knapsack_01: negative item index");
    if (!(item.weight > 0.0)) throw std::invalid_argument("knapsack_01: weight must be > 0");
    max_index = std::max(max_index, static_cast<std::size_t>(item.index));
  }

  std::vector<KnapsackItem> ordered(items);
  std::sort(ordered.begin(), ordered.end(),
            [](const KnapsackItem& a, const KnapsackItem& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].index == ordered[i - 1].index) {
      throw std::invalid_argument("knapsack_01: duplicate item index");
    }
  }

  const std::int64_t cap = static_cast<std::int64_t>(std::floor(capacity / granularity + 1e-9));

  CacheSet result;
  result.selected.assign(items.empty() ? 0 : max_index + 1, false);
  if (cap <= 0) return result;

  // Keep only profitable items that fit.
  std::vector<KnapsackItem> usable;
  std::vector<std::int64_t> weights;
  for (const KnapsackItem& item : ordered) {
    const std::int64_t w = detail::scale_to_integer(item.weight, granularity, "knapsack_01");
    if (item.value > 0.0 && w <= cap) {
      usable.push_back(item);
      weights.push_back(w);
    }
  }

  const std::size_t n = usable.size();
  const std::size_t width = static_cast<std::size_t>(cap) + 1;
  std::vector<double> dp(width, 0.0);
  std::vector<bool> take(n * width, false);

  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t w = weights[i];
    for (std::int64_t c = cap; c >= w; --c) {
      const double candidate = dp[static_cast<std::size_t>(c - w)] + usable[i].value;
      if (candidate > dp[static_cast<std::size_t>(c)]) {
        dp[static_cast<std::size_t>(c)] = candidate;
        take[i * width + static_cast<std::size_t>(c)] = true;
      }
    }
  }

  std::int64_t c = cap;
  for (std::size_t i = n; i-- > 0;) {
    if (take[i * width + static_cast<std::size_t>(c)]) {
      const std::size_t j = static_cast<std::size_t>(usable[i].index);
      result.selected[j] = true;
      result.total_value += usable[i].value;
      result.total_weight += usable[i].weight;
      c -= weights[i];
    }
  }
  return result;
}

/// All subsets of programs satisfying the capacity constraint, in ascending
/// bitmask order (bit j = program j). Guarded to N <= 20.
inline std::vector<std::uint32_t> enumerate_feasible_subsets(const ProgramCatalog& catalog,
                                                             double capacity) {
  const std::size_t n = catalog.size();
  if (n > 20) {
    throw std::invalid_argument("enumerate_feasible_subsets: catalog too large (N must be <= 20)");
  }
  std::vector<std::uint32_t> feasible;
  const std::uint32_t total = 1u << n;
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    double weight = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (1u << j)) weight += catalog.programs[j].size;
    }
    if (weight <= capacity + 1e-12 * std::max(1.0, capacity)) feasible.push_back(mask);
  }
  return feasible;
}

inline CacheSet cache_from_mask(const ProgramCatalog& catalog, std::uint32_t mask) {
  CacheSet set;
  set.selected.assign(catalog.size(), false);
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    if (mask & (1u << j)) {
      set.selected[j] = true;
      set.total_weight += catalog.programs[j].size;
    }
  }
  return set;
}

}  // namespace mecsp
