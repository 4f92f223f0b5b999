#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dapmap/market.hpp"

namespace dapmap {

/// Normalized Herfindahl-Hirschman index of market j over the m+1 sources
/// (local supply counts as one source): 0 at equal shares, 1 at monopoly.
double concentration(std::size_t j, const FlowMatrix& flows, const MarketInstance& inst);

/// Normalized diversification of supplier i across the n markets, using
/// capacity s_i as the denominator. Empty when the supplier sells nothing
/// (or n = 1, where the index is undefined).
std::optional<double> diversification(std::size_t i, const FlowMatrix& flows,
                                      const MarketInstance& inst);

/// x_o^j / d_j.
double local_share(std::size_t j, const FlowMatrix& flows, const MarketInstance& inst);

/// Supplier sales over total demand of all markets.
double global_supplier_share(std::size_t i, const FlowMatrix& flows, const MarketInstance& inst);

struct MarketStructureRow {
  std::size_t market{0};
  double concentration{0.0};
  double local_share{0.0};
  std::vector<double> supplier_shares;  // x_i^j / d_j
};

struct SupplierStructureRow {
  std::size_t supplier{0};
  std::optional<double> diversification;
  bool low_utilization{false};  // 0 < sold < s_i; the raw index may leave [0, 1]
  double global_share{0.0};
  Quantity sold{0};
};

MarketStructureRow market_structure(std::size_t j, const FlowMatrix& flows,
                                    const MarketInstance& inst);
SupplierStructureRow supplier_structure(std::size_t i, const FlowMatrix& flows,
                                        const MarketInstance& inst);

/// Sample mean and standard deviation with denominator count - 1 (0 for a
/// single observation).
struct SampleStats {
  double mean{0.0};
  double sd{0.0};
  std::size_t count{0};
};

SampleStats sample_stats(std::span<const double> values);

/// Trade costs per replication in relative units; empty cells are masked.
using CostDraw = Grid<std::optional<double>>;

struct EntryFloorSummary {
  Grid<std::optional<SampleStats>> cells;     // per (supplier, market); empty where masked
  std::vector<std::optional<double>> floor;   // per market: mean over draws of min_i t_ij
};

/// Summarizes trade-cost draws over replications. Throws ValidationError on
/// zero draws or inconsistent shapes/masks.
EntryFloorSummary entry_floor_summary(std::span<const CostDraw> draws);

}  // namespace dapmap
