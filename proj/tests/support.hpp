#pragma once

// Shared helpers for the unit tests and the acceptance runner: random small
// instances and independent reference computations.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dapmap/market.hpp"
#include "dapmap/rng.hpp"

namespace dapmap::testing {

struct InstanceLimits {
  std::size_t max_suppliers{3};
  std::size_t max_markets{3};
  std::int64_t max_capacity{4};
  std::int64_t max_demand{5};
  std::int64_t max_cost{20};
  std::int64_t max_congestion{3};
  bool random_mask{true};
};

inline std::int64_t uniform(RandomStream& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.pick(static_cast<std::size_t>(hi - lo + 1)));
}

/// Random valid instance within the limits. About one pair in five is
/// masked when random_mask is set.
inline MarketInstance random_instance(RandomStream& rng, const InstanceLimits& lim) {
  const auto m = static_cast<std::size_t>(uniform(rng, 1, static_cast<std::int64_t>(lim.max_suppliers)));
  const auto n = static_cast<std::size_t>(uniform(rng, 1, static_cast<std::int64_t>(lim.max_markets)));
  MarketInstance inst;
  for (std::size_t i = 0; i < m; ++i) inst.capacity.emplace_back(uniform(rng, 1, lim.max_capacity));
  for (std::size_t j = 0; j < n; ++j) inst.demand.emplace_back(uniform(rng, 1, lim.max_demand));
  inst.congestion = Money{uniform(rng, 0, lim.max_congestion)};
  for (std::size_t j = 0; j < n; ++j) inst.local_cost.emplace_back(uniform(rng, 1, lim.max_cost));
  inst.trade_cost = Grid<std::optional<Money>>(m, n);
  inst.allowed = Grid<std::uint8_t>(m, n, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (lim.random_mask && rng.pick(5) == 0) continue;
      inst.allowed(i, j) = 1;
      inst.trade_cost(i, j) = Money{uniform(rng, 0, lim.max_cost)};
    }
  }
  return inst;
}

/// Valuation by filling one unit at a time: each slot goes to the cheapest
/// marginal source (local first on ties, then lower supplier index), and
/// the saving is local spend minus total spend.
inline std::int64_t unit_greedy_valuation(const std::vector<std::int64_t>& caps, std::size_t j,
                                          const MarketInstance& inst) {
  const std::int64_t a = inst.congestion.value;
  const std::int64_t c = inst.local_cost[j].value;
  const std::int64_t d = inst.demand[j].value;
  std::vector<std::int64_t> taken(caps.size(), 0);
  std::int64_t local = 0;
  std::int64_t spend = 0;
  for (std::int64_t slot = 0; slot < d; ++slot) {
    std::int64_t best = c + a * (2 * local + 1);
    int source = -1;
    for (std::size_t i = 0; i < caps.size(); ++i) {
      if (!inst.is_allowed(i, j) || taken[i] >= caps[i]) continue;
      const std::int64_t marginal = inst.trade_cost(i, j)->value + a * (2 * taken[i] + 1);
      if (marginal < best) {
        best = marginal;
        source = static_cast<int>(i);
      }
    }
    spend += best;
    if (source < 0) {
      ++local;
    } else {
      ++taken[static_cast<std::size_t>(source)];
    }
  }
  return d * (a * d + c) - spend;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(DAPMAP_FIXTURE_DIR) / relative;
}

}  // namespace dapmap::testing
