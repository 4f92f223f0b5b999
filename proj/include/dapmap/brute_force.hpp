#pragma once

// Exhaustive reference solver for small instances. Shares nothing with the
// greedy valuation or the ascending auction beyond the spend formulas.

#include <cstdint>
#include <span>
#include <vector>

#include "dapmap/market.hpp"

namespace dapmap {

/// Valuation by enumerating every bundle z <= caps with sum z <= d_j.
Money valuation_by_enumeration(std::span<const std::int64_t> caps, std::size_t j,
                               const MarketInstance& inst);

/// Largest utility over every feasible bundle at the given markups, by
/// enumeration.
Money best_utility_by_enumeration(std::size_t j, const MarkupVector& markups,
                                  const MarketInstance& inst);

struct BruteForceResult {
  Equilibrium chosen;                    // smallest equilibrium found
  std::vector<Equilibrium> equilibria;   // every equilibrium markup vector on the grid (one witness allocation each)
  bool componentwise_minimal{false};     // chosen markups <= every other equilibrium's
};

/// Default ceiling on grid points times bundles examined.
inline constexpr std::int64_t kDefaultEnumerationBudget = 2'000'000'000;

/// Enumerates all markup vectors on [0, p_max]^m and all flow matrices that
/// respect mask, capacity and per-market demand caps, and collects the
/// equilibria. Markups above a supplier's largest possible first-unit saving
/// are skipped because such a supplier can sell nothing and condition 3
/// would fail. Throws RuntimeFailure when the budget would be exceeded or
/// when no equilibrium exists on the grid.
BruteForceResult brute_force_equilibrium(const MarketInstance& inst, Money p_max,
                                         std::int64_t budget = kDefaultEnumerationBudget);

}  // namespace dapmap
