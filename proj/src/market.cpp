#include "dapmap/market.hpp"

#include <sstream>

#include "dapmap/error.hpp"

namespace dapmap {

Money MarketInstance::cost(std::size_t i, std::size_t j) const {
  if (!is_allowed(i, j) || !trade_cost(i, j)) {
    std::ostringstream os;
    os << "trade cost requested on masked pair (" << i << ", " << j << ")";
    throw ValidationError(os.str());
  }
  return *trade_cost(i, j);
}

MarketInstance MarketInstance::full_mask(std::vector<std::int64_t> capacity,
                                         std::vector<std::int64_t> demand,
                                         std::int64_t congestion,
                                         std::vector<std::int64_t> local_cost,
                                         const std::vector<std::vector<std::int64_t>>& trade_cost) {
  MarketInstance inst;
  for (auto s : capacity) inst.capacity.emplace_back(s);
  for (auto d : demand) inst.demand.emplace_back(d);
  inst.congestion = Money{congestion};
  for (auto c : local_cost) inst.local_cost.emplace_back(c);
  const std::size_t m = inst.capacity.size();
  const std::size_t n = inst.demand.size();
  inst.trade_cost = Grid<std::optional<Money>>(m, n);
  inst.allowed = Grid<std::uint8_t>(m, n, 1);
  for (std::size_t i = 0; i < m && i < trade_cost.size(); ++i) {
    for (std::size_t j = 0; j < n && j < trade_cost[i].size(); ++j) {
      inst.trade_cost(i, j) = Money{trade_cost[i][j]};
    }
  }
  return inst;
}

std::int64_t FlowMatrix::sold(std::size_t i) const {
  std::int64_t total = 0;
  for (std::size_t j = 0; j < markets(); ++j) total += x_(i, j);
  return total;
}

std::int64_t FlowMatrix::imported(std::size_t j) const {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < suppliers(); ++i) total += x_(i, j);
  return total;
}

std::int64_t FlowMatrix::local(std::size_t j, const MarketInstance& inst) const {
  return inst.demand[j].value - imported(j);
}

std::vector<std::string> validate_instance(const MarketInstance& inst) {
  std::vector<std::string> report;
  const std::size_t m = inst.suppliers();
  const std::size_t n = inst.markets();
  auto add = [&report](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    report.push_back(os.str());
  };

  if (m == 0) add("no international suppliers");
  if (n == 0) add("no markets");
  for (std::size_t i = 0; i < m; ++i) {
    if (inst.capacity[i].value < 1) add("capacity must be >= 1 (supplier ", i, ")");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (inst.demand[j].value < 1) add("demand must be >= 1 (market ", j, ")");
  }
  if (inst.congestion.value < 0) add("congestion cost a must be >= 0");
  if (inst.local_cost.size() != n) {
    add("local cost vector has ", inst.local_cost.size(), " entries, expected ", n);
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      if (inst.local_cost[j].value <= 0) add("local cost must be > 0 (market ", j, ")");
    }
  }
  if (inst.trade_cost.rows() != m || inst.trade_cost.cols() != n || inst.allowed.rows() != m ||
      inst.allowed.cols() != n) {
    add("trade cost table or mask has wrong shape");
    return report;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& t = inst.trade_cost(i, j);
      if (inst.is_allowed(i, j)) {
        if (!t) {
          add("missing cost on allowed pair (", i, ", ", j, ")");
        } else if (t->value < 0) {
          add("trade cost must be >= 0 on pair (", i, ", ", j, ")");
        }
      } else if (t) {
        add("cost on masked pair (", i, ", ", j, ")");
      }
    }
  }
  return report;
}

std::vector<std::string> validate_flows(const MarketInstance& inst, const FlowMatrix& flows) {
  std::vector<std::string> report;
  const std::size_t m = inst.suppliers();
  const std::size_t n = inst.markets();
  if (flows.suppliers() != m || flows.markets() != n) {
    report.emplace_back("flow matrix has wrong shape");
    return report;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (flows.at(i, j) < 0) {
        report.push_back("negative flow (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      if (flows.at(i, j) != 0 && !inst.is_allowed(i, j)) {
        report.push_back("flow on masked pair (" + std::to_string(i) + ", " + std::to_string(j) +
                         ")");
      }
    }
    if (flows.sold(i) > inst.capacity[i].value) {
      report.push_back("supplier " + std::to_string(i) + " sells beyond capacity");
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (flows.imported(j) > inst.demand[j].value) {
      report.push_back("market " + std::to_string(j) + " imports beyond demand");
    }
  }
  return report;
}

void require_valid(const MarketInstance& inst) {
  const auto report = validate_instance(inst);
  if (report.empty()) return;
  std::string joined = "invalid market instance:";
  for (const auto& line : report) joined += " " + line + ";";
  throw ValidationError(joined);
}

}  // namespace dapmap
