#include "dapmap/brute_force.hpp"

#include <algorithm>
#include <limits>

#include "dapmap/auction.hpp"
#include "dapmap/error.hpp"

namespace dapmap {
namespace {

using Bundle = std::vector<std::int64_t>;

// Every z with 0 <= z_i <= limit_i and sum z <= total.
std::vector<Bundle> enumerate_bundles(const std::vector<std::int64_t>& limit, std::int64_t total) {
  std::vector<Bundle> out;
  Bundle z(limit.size(), 0);
  auto rec = [&](auto&& self, std::size_t i, std::int64_t left) -> void {
    if (i == limit.size()) {
      out.push_back(z);
      return;
    }
    for (std::int64_t k = 0; k <= std::min(limit[i], left); ++k) {
      z[i] = k;
      self(self, i + 1, left - k);
    }
    z[i] = 0;
  };
  rec(rec, 0, total);
  return out;
}

std::int64_t savings(const Bundle& z, std::size_t j, const MarketInstance& inst) {
  const std::int64_t d = inst.demand[j].value;
  std::int64_t imported = 0;
  std::int64_t import_cost = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0) continue;
    imported += z[i];
    import_cost += import_spend(Quantity{z[i]}, i, j, inst).value;
  }
  return local_spend(Quantity{d}, j, inst).value - local_spend(Quantity{d - imported}, j, inst).value -
         import_cost;
}

std::vector<std::int64_t> bundle_limits(std::span<const std::int64_t> caps, std::size_t j,
                                        const MarketInstance& inst) {
  std::vector<std::int64_t> limit(inst.suppliers(), 0);
  for (std::size_t i = 0; i < inst.suppliers(); ++i) {
    if (inst.is_allowed(i, j)) limit[i] = std::min(caps[i], inst.demand[j].value);
  }
  return limit;
}

bool dominated_by(const Bundle& lower, const Bundle& upper) {
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] > upper[i]) return false;
  }
  return true;
}

struct MarketTable {
  std::vector<Bundle> bundles;
  std::vector<std::int64_t> value;  // v_j(z) for each bundle
};

MarketTable tabulate(std::size_t j, const MarketInstance& inst) {
  std::vector<std::int64_t> caps;
  for (auto s : inst.capacity) caps.push_back(s.value);
  MarketTable table;
  table.bundles = enumerate_bundles(bundle_limits(caps, j, inst), inst.demand[j].value);
  std::vector<std::int64_t> raw(table.bundles.size());
  for (std::size_t b = 0; b < table.bundles.size(); ++b) raw[b] = savings(table.bundles[b], j, inst);
  table.value.assign(table.bundles.size(), std::numeric_limits<std::int64_t>::min());
  for (std::size_t b = 0; b < table.bundles.size(); ++b) {
    for (std::size_t c = 0; c < table.bundles.size(); ++c) {
      if (dominated_by(table.bundles[c], table.bundles[b])) {
        table.value[b] = std::max(table.value[b], raw[c]);
      }
    }
  }
  return table;
}

}  // namespace

Money valuation_by_enumeration(std::span<const std::int64_t> caps, std::size_t j,
                               const MarketInstance& inst) {
  std::int64_t best = 0;
  for (const auto& z : enumerate_bundles(bundle_limits(caps, j, inst), inst.demand[j].value)) {
    best = std::max(best, savings(z, j, inst));
  }
  return Money{best};
}

Money best_utility_by_enumeration(std::size_t j, const MarkupVector& markups,
                                  const MarketInstance& inst) {
  const MarketTable table = tabulate(j, inst);
  std::int64_t best = std::numeric_limits<std::int64_t>::min();
  for (std::size_t b = 0; b < table.bundles.size(); ++b) {
    std::int64_t u = table.value[b];
    for (std::size_t i = 0; i < markups.size(); ++i) u -= markups[i].value * table.bundles[b][i];
    best = std::max(best, u);
  }
  return Money{best};
}

BruteForceResult brute_force_equilibrium(const MarketInstance& inst, Money p_max,
                                         std::int64_t budget) {
  require_valid(inst);
  const std::size_t m = inst.suppliers();
  const std::size_t n = inst.markets();
  if (p_max.value < 0) throw ValidationError("p_max must be >= 0");

  std::vector<MarketTable> tables;
  std::int64_t bundles_total = 0;
  for (std::size_t j = 0; j < n; ++j) {
    tables.push_back(tabulate(j, inst));
    bundles_total += static_cast<std::int64_t>(tables.back().bundles.size());
  }

  // Above this markup even the first unit of supplier i saves less than it
  // costs in every market, so i would be unsold at a positive markup.
  std::vector<std::int64_t> top(m, 0);
  std::int64_t grid_points = 1;
  for (std::size_t i = 0; i < m; ++i) {
    std::int64_t bound = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!inst.is_allowed(i, j)) continue;
      const std::int64_t a = inst.congestion.value;
      const std::int64_t worst_local = inst.local_cost[j].value + a * (2 * inst.demand[j].value - 1);
      bound = std::max(bound, worst_local - inst.cost(i, j).value - a);
    }
    top[i] = std::min(p_max.value, bound);
    grid_points *= top[i] + 1;
    if (grid_points > budget) throw RuntimeFailure("instance too large for enumeration");
  }
  if (grid_points > budget / std::max<std::int64_t>(1, bundles_total)) {
    throw RuntimeFailure("instance too large for enumeration");
  }

  BruteForceResult result;
  std::vector<std::int64_t> p(m, 0);
  std::vector<std::vector<std::size_t>> argmax(n);
  std::vector<std::int64_t> sold(m, 0);
  std::vector<std::size_t> pick(n, 0);

  auto search = [&](auto&& self, std::size_t j) -> bool {
    if (j == n) {
      for (std::size_t i = 0; i < m; ++i) {
        if (sold[i] == 0 && p[i] != 0) return false;
      }
      return true;
    }
    for (std::size_t b : argmax[j]) {
      const Bundle& z = tables[j].bundles[b];
      bool fits = true;
      for (std::size_t i = 0; i < m; ++i) {
        sold[i] += z[i];
        if (sold[i] > inst.capacity[i].value) fits = false;
      }
      if (fits) {
        pick[j] = b;
        if (self(self, j + 1)) {
          for (std::size_t i = 0; i < m; ++i) sold[i] -= z[i];
          return true;
        }
      }
      for (std::size_t i = 0; i < m; ++i) sold[i] -= z[i];
    }
    return false;
  };

  while (true) {
    for (std::size_t j = 0; j < n; ++j) {
      const MarketTable& table = tables[j];
      std::int64_t best = std::numeric_limits<std::int64_t>::min();
      argmax[j].clear();
      for (std::size_t b = 0; b < table.bundles.size(); ++b) {
        std::int64_t u = table.value[b];
        for (std::size_t i = 0; i < m; ++i) u -= p[i] * table.bundles[b][i];
        if (u > best) {
          best = u;
          argmax[j].clear();
        }
        if (u == best) argmax[j].push_back(b);
      }
    }
    std::fill(sold.begin(), sold.end(), 0);
    if (search(search, 0)) {
      Equilibrium eq;
      for (auto v : p) eq.markups.emplace_back(v);
      eq.flows = FlowMatrix(m, n);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) eq.flows.at(i, j) = tables[j].bundles[pick[j]][i];
      }
      result.equilibria.push_back(std::move(eq));
    }

    // Odometer, last supplier fastest: visits the grid in lexicographic order.
    bool advanced = false;
    for (std::size_t k = m; k-- > 0;) {
      if (p[k] < top[k]) {
        ++p[k];
        advanced = true;
        break;
      }
      p[k] = 0;
    }
    if (!advanced) break;
  }

  if (result.equilibria.empty()) throw RuntimeFailure("no equilibrium on the markup grid");

  // The first equilibrium found is the lexicographically smallest.
  result.chosen = result.equilibria.front();
  for (const auto& candidate : result.equilibria) {
    bool below_all = true;
    for (const auto& other : result.equilibria) {
      for (std::size_t i = 0; i < m && below_all; ++i) {
        if (candidate.markups[i] > other.markups[i]) below_all = false;
      }
      if (!below_all) break;
    }
    if (below_all) {
      result.chosen = candidate;
      result.componentwise_minimal = true;
      break;
    }
  }
  return result;
}

}  // namespace dapmap
