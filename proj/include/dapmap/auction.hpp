#pragma once

// Buyer valuation, demand, and the ascending auction that computes the
// smallest competitive markup vector of the many-to-many market.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dapmap/market.hpp"

namespace dapmap {

/// Spending on z local units in market j: z * (a z + c_oj).
Money local_spend(Quantity z, std::size_t j, const MarketInstance& inst);

/// Spending at cost value on z units from supplier i delivered to market j:
/// z * (a z + t_ij).
Money import_spend(Quantity z, std::size_t i, std::size_t j, const MarketInstance& inst);

/// Maximum savings market j obtains by replacing local goods with at most
/// caps[i] units from each supplier. Computed by greedy marginal filling.
Money valuation(std::span<const std::int64_t> caps, std::size_t j, const MarketInstance& inst);

/// Imports demanded by one market at given markups.
struct DemandBundle {
  std::vector<std::int64_t> imports;  // z_i per supplier
  Money utility{0};                   // valuation(z) - sum_i p_i z_i
};

/// The minimal utility-maximizing bundle: ties prefer local units, then
/// lower supplier index.
DemandBundle demand_bundle(std::size_t j, const MarkupVector& markups, const MarketInstance& inst);

/// Worst marginal local cost over all markets, max_j c_oj + a(2 d_j - 1).
/// No buyer pays more than this for a unit, so it bounds every markup.
Money max_local_marginal(const MarketInstance& inst);

/// Hard bound on the number of price ticks: m * (max_local_marginal + 1).
std::int64_t iteration_cap(const MarketInstance& inst);

/// Largest number of suppliers the auction accepts (the steepest ascent
/// direction is searched over all supplier subsets).
inline constexpr std::size_t kMaxAuctionSuppliers = 16;

/// Called after every price tick with the new markup vector.
using TickObserver = std::function<void(const MarkupVector&)>;

/// Ascending auction from zero markups. Each tick raises by one minor unit
/// the markups of the minimal supplier set that most reduces the market's
/// Lyapunov function; it stops at the smallest equilibrium markup vector,
/// then allocates flows at those markups so every supplier with a positive
/// markup sells out. Throws RuntimeFailure if the iteration cap is exceeded.
Equilibrium run_english_auction(const MarketInstance& inst, const TickObserver& on_tick = {});

/// Lyapunov function sum_i s_i p_i + sum_j max_z [v_j(z) - p.z]; its
/// minimizers are exactly the competitive markup vectors.
Money lyapunov(const MarketInstance& inst, const MarkupVector& markups);

struct VerificationReport {
  bool structure_ok{true};    // shapes, non-negativity, mask, per-market demand cap
  bool capacity_ok{true};     // condition 1
  bool utility_ok{true};      // condition 2
  bool clearance_ok{true};    // condition 3
  std::vector<std::string> witnesses;

  bool passed() const { return structure_ok && capacity_ok && utility_ok && clearance_ok; }
};

/// Checks the three equilibrium conditions and reports a witness for each
/// failure.
VerificationReport verify_equilibrium(const MarketInstance& inst, const Equilibrium& eq);

}  // namespace dapmap
