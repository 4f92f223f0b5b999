#include "dapmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dapmap/error.hpp"

namespace dapmap {

double concentration(std::size_t j, const FlowMatrix& flows, const MarketInstance& inst) {
  const double d = static_cast<double>(inst.demand[j].value);
  const double sources = static_cast<double>(inst.suppliers() + 1);
  const double local = static_cast<double>(flows.local(j, inst)) / d;
  double squares = local * local;
  for (std::size_t i = 0; i < inst.suppliers(); ++i) {
    const double share = static_cast<double>(flows.at(i, j)) / d;
    squares += share * share;
  }
  return (squares - 1.0 / sources) / (1.0 - 1.0 / sources);
}

std::optional<double> diversification(std::size_t i, const FlowMatrix& flows,
                                      const MarketInstance& inst) {
  const std::size_t n = inst.markets();
  if (flows.sold(i) == 0 || n < 2) return std::nullopt;
  const double s = static_cast<double>(inst.capacity[i].value);
  double squares = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double share = static_cast<double>(flows.at(i, j)) / s;
    squares += share * share;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return 1.0 - (squares - inv_n) / (1.0 - inv_n);
}

double local_share(std::size_t j, const FlowMatrix& flows, const MarketInstance& inst) {
  return static_cast<double>(flows.local(j, inst)) / static_cast<double>(inst.demand[j].value);
}

double global_supplier_share(std::size_t i, const FlowMatrix& flows, const MarketInstance& inst) {
  std::int64_t total = 0;
  for (auto d : inst.demand) total += d.value;
  return static_cast<double>(flows.sold(i)) / static_cast<double>(total);
}

MarketStructureRow market_structure(std::size_t j, const FlowMatrix& flows,
                                    const MarketInstance& inst) {
  MarketStructureRow row;
  row.market = j;
  row.concentration = concentration(j, flows, inst);
  row.local_share = local_share(j, flows, inst);
  const double d = static_cast<double>(inst.demand[j].value);
  for (std::size_t i = 0; i < inst.suppliers(); ++i) {
    row.supplier_shares.push_back(static_cast<double>(flows.at(i, j)) / d);
  }
  return row;
}

SupplierStructureRow supplier_structure(std::size_t i, const FlowMatrix& flows,
                                        const MarketInstance& inst) {
  SupplierStructureRow row;
  row.supplier = i;
  row.diversification = diversification(i, flows, inst);
  row.sold = Quantity{flows.sold(i)};
  row.low_utilization = row.sold.value > 0 && row.sold < inst.capacity[i];
  row.global_share = global_supplier_share(i, flows, inst);
  return row;
}

SampleStats sample_stats(std::span<const double> values) {
  SampleStats stats;
  stats.count = values.size();
  if (values.empty()) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return stats;
}

EntryFloorSummary entry_floor_summary(std::span<const CostDraw> draws) {
  if (draws.empty()) throw ValidationError("entry floor summary needs at least one replication");
  const std::size_t m = draws.front().rows();
  const std::size_t n = draws.front().cols();
  for (const auto& draw : draws) {
    if (draw.rows() != m || draw.cols() != n) throw ValidationError("cost draws differ in shape");
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (draw(i, j).has_value() != draws.front()(i, j).has_value()) {
          throw ValidationError("cost draws differ in trade mask");
        }
      }
    }
  }

  EntryFloorSummary summary;
  summary.cells = Grid<std::optional<SampleStats>>(m, n);
  std::vector<double> column;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!draws.front()(i, j)) continue;
      column.clear();
      for (const auto& draw : draws) column.push_back(*draw(i, j));
      summary.cells(i, j) = sample_stats(column);
    }
  }
  summary.floor.assign(n, std::nullopt);
  for (std::size_t j = 0; j < n; ++j) {
    double total = 0.0;
    bool any = false;
    for (const auto& draw : draws) {
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        if (draw(i, j)) {
          lowest = std::min(lowest, *draw(i, j));
          any = true;
        }
      }
      if (any) total += lowest;
    }
    if (any) summary.floor[j] = total / static_cast<double>(draws.size());
  }
  return summary;
}

}  // namespace dapmap
