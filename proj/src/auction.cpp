#include "dapmap/auction.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "dapmap/error.hpp"

namespace dapmap {
namespace {

// A supply source as seen by one buyer: the k-th unit costs
// base + a(2k - 1), at most `cap` units.
struct Source {
  std::int64_t base;
  std::int64_t cap;
};

// Units of a source whose marginal cost is <= level.
std::int64_t units_at_most(const Source& src, std::int64_t a, std::int64_t level) {
  if (a == 0) return level >= src.base ? src.cap : 0;
  const std::int64_t num = level - src.base + a;
  if (num < 0) return 0;
  return std::min(src.cap, num / (2 * a));
}

std::int64_t spend(const Source& src, std::int64_t a, std::int64_t units) {
  return units * (a * units + src.base);
}

// Cheapest way to fill `slots` units from `sources` (index 0 = local).
// Greedy filling by lowest marginal cost is exact because every source has
// nondecreasing marginals; it is done in one shot by locating the marginal
// cost level of the last unit. Units strictly below that level are always
// bought; tied units go to sources in index order.
struct Fill {
  std::vector<std::int64_t> units;   // chosen units per source
  std::vector<std::int64_t> below;   // units strictly cheaper than the level
  std::vector<std::int64_t> tied;    // units exactly at the level
  std::int64_t level{0};
  std::int64_t cost{0};
};

Fill cheapest_fill(const std::vector<Source>& sources, std::int64_t a, std::int64_t slots) {
  Fill fill;
  const std::size_t k = sources.size();
  fill.units.assign(k, 0);
  fill.below.assign(k, 0);
  fill.tied.assign(k, 0);
  if (slots == 0) return fill;

  auto total_at_most = [&](std::int64_t level) {
    std::int64_t total = 0;
    for (const auto& src : sources) total += units_at_most(src, a, level);
    return total;
  };

  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  std::int64_t capacity = 0;
  for (const auto& src : sources) {
    if (src.cap <= 0) continue;
    lo = std::min(lo, src.base + a);
    hi = std::max(hi, src.base + a * (2 * src.cap - 1));
    capacity += src.cap;
  }
  if (capacity < slots) throw RuntimeFailure("sources cannot fill the requested slots");

  // Smallest level with total_at_most(level) >= slots lies in [lo, hi].
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (total_at_most(mid) >= slots) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  fill.level = lo;

  std::int64_t remaining = slots;
  for (std::size_t s = 0; s < k; ++s) {
    fill.below[s] = units_at_most(sources[s], a, fill.level - 1);
    fill.tied[s] = units_at_most(sources[s], a, fill.level) - fill.below[s];
    remaining -= fill.below[s];
  }
  for (std::size_t s = 0; s < k; ++s) {
    const std::int64_t take = std::min(remaining, fill.tied[s]);
    fill.units[s] = fill.below[s] + take;
    remaining -= take;
    fill.cost += spend(sources[s], a, fill.units[s]);
  }
  return fill;
}

// Sources for market j: local first, then every supplier (masked suppliers
// get zero capacity so indices stay aligned).
std::vector<Source> market_sources(const MarketInstance& inst, std::size_t j,
                                   std::span<const std::int64_t> caps,
                                   std::span<const std::int64_t> markups) {
  const std::int64_t d = inst.demand[j].value;
  std::vector<Source> sources;
  sources.reserve(inst.suppliers() + 1);
  sources.push_back({inst.local_cost[j].value, d});
  for (std::size_t i = 0; i < inst.suppliers(); ++i) {
    if (!inst.is_allowed(i, j)) {
      sources.push_back({0, 0});
      continue;
    }
    const std::int64_t p = markups.empty() ? 0 : markups[i];
    sources.push_back({inst.cost(i, j).value + p, std::min(caps[i], d)});
  }
  return sources;
}

std::vector<std::int64_t> capacities(const MarketInstance& inst) {
  std::vector<std::int64_t> caps;
  caps.reserve(inst.suppliers());
  for (auto s : inst.capacity) caps.push_back(s.value);
  return caps;
}

std::vector<std::int64_t> raw(const MarkupVector& p) {
  std::vector<std::int64_t> out;
  out.reserve(p.size());
  for (auto v : p) out.push_back(v.value);
  return out;
}

// max_z [v_j(z) - p.z] = e_oj(d_j) - cheapest fill cost at markups p.
std::int64_t indirect_utility(const MarketInstance& inst, std::size_t j,
                              std::span<const std::int64_t> caps,
                              std::span<const std::int64_t> markups) {
  const std::int64_t d = inst.demand[j].value;
  const auto sources = market_sources(inst, j, caps, markups);
  const Fill fill = cheapest_fill(sources, inst.congestion.value, d);
  return d * (inst.congestion.value * d + inst.local_cost[j].value) - fill.cost;
}

// Augmenting-path max flow with edge priority classes. Flow is pushed using
// class-1 edges first, then classes <= 2, then <= 3; flow already on an
// edge into the sink is never withdrawn by a later phase.
class PhasedFlow {
 public:
  explicit PhasedFlow(std::size_t nodes) : adj_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, std::int64_t cap, int cls) {
    adj_[from].push_back(edges_.size());
    edges_.push_back({to, cap, cls});
    adj_[to].push_back(edges_.size());
    edges_.push_back({from, 0, cls});
    return edges_.size() - 2;
  }

  std::int64_t flow_on(std::size_t edge) const { return edges_[edge ^ 1].cap; }

  void run(std::size_t source, std::size_t sink, int max_class) {
    for (int phase = 1; phase <= max_class; ++phase) {
      while (true) {
        std::vector<std::uint8_t> seen(adj_.size(), 0);
        const std::int64_t pushed =
            augment(source, sink, std::numeric_limits<std::int64_t>::max(), phase, seen);
        if (pushed == 0) break;
      }
    }
  }

 private:
  struct Edge {
    std::size_t to;
    std::int64_t cap;
    int cls;
  };

  std::int64_t augment(std::size_t node, std::size_t sink, std::int64_t limit, int phase,
                       std::vector<std::uint8_t>& seen) {
    if (node == sink) return limit;
    seen[node] = 1;
    for (std::size_t e : adj_[node]) {
      Edge& edge = edges_[e];
      if (edge.cap <= 0 || edge.cls > phase || seen[edge.to]) continue;
      const std::int64_t got = augment(edge.to, sink, std::min(limit, edge.cap), phase, seen);
      if (got > 0) {
        edge.cap -= got;
        edges_[e ^ 1].cap += got;
        return got;
      }
    }
    return 0;
  }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
};

// Chooses one utility-maximizing bundle per market at the given markups such
// that capacities hold and suppliers with positive markups sell as much as
// possible (all of their capacity at a competitive markup vector).
FlowMatrix allocate(const MarketInstance& inst, const MarkupVector& markups) {
  const std::size_t m = inst.suppliers();
  const std::size_t n = inst.markets();
  const auto caps = capacities(inst);
  const auto p = raw(markups);

  std::vector<Fill> fills;
  fills.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto sources = market_sources(inst, j, caps, p);
    fills.push_back(cheapest_fill(sources, inst.congestion.value, inst.demand[j].value));
  }

  // Nodes: 0 source, 1 sink, markets, suppliers.
  const std::size_t source = 0;
  const std::size_t sink = 1;
  auto market_node = [](std::size_t j) { return 2 + j; };
  auto supplier_node = [n](std::size_t i) { return 2 + n + i; };
  PhasedFlow net(2 + n + m);

  std::vector<std::size_t> demand_edges(n);
  Grid<std::int64_t> tie_edges(m, n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    const Fill& fill = fills[j];
    std::int64_t committed = 0;
    for (const auto b : fill.below) committed += b;
    demand_edges[j] = net.add_edge(source, market_node(j), inst.demand[j].value - committed, 0);
    if (fill.tied[0] > 0) net.add_edge(market_node(j), sink, fill.tied[0], 3);
    for (std::size_t i = 0; i < m; ++i) {
      if (fill.tied[i + 1] > 0) {
        const int cls = p[i] > 0 ? 1 : 2;
        tie_edges(i, j) = static_cast<std::int64_t>(
            net.add_edge(market_node(j), supplier_node(i), fill.tied[i + 1], cls));
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::int64_t committed = 0;
    for (std::size_t j = 0; j < n; ++j) committed += fills[j].below[i + 1];
    const std::int64_t room = caps[i] - committed;
    if (room < 0) {
      std::ostringstream os;
      os << "supplier " << i << " is overdemanded at the final markups";
      throw RuntimeFailure(os.str());
    }
    net.add_edge(supplier_node(i), sink, room, 0);
  }
  net.run(source, sink, 3);

  FlowMatrix flows(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    const Fill& fill = fills[j];
    std::int64_t committed = 0;
    for (const auto b : fill.below) committed += b;
    if (net.flow_on(demand_edges[j]) != inst.demand[j].value - committed) {
      throw RuntimeFailure("no capacity-feasible demand selection at the final markups");
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::int64_t x = fill.below[i + 1];
      if (tie_edges(i, j) >= 0) x += net.flow_on(static_cast<std::size_t>(tie_edges(i, j)));
      flows.at(i, j) = x;
    }
  }
  return flows;
}

std::int64_t lyapunov_raw(const MarketInstance& inst, std::span<const std::int64_t> caps,
                          std::span<const std::int64_t> p) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < inst.suppliers(); ++i) total += caps[i] * p[i];
  for (std::size_t j = 0; j < inst.markets(); ++j) total += indirect_utility(inst, j, caps, p);
  return total;
}

}  // namespace

Money local_spend(Quantity z, std::size_t j, const MarketInstance& inst) {
  if (j >= inst.markets()) throw ValidationError("market index out of range");
  if (z.value < 0 || z.value > inst.demand[j].value) {
    throw ValidationError("local purchase outside [0, d_j]");
  }
  return Money{z.value * (inst.congestion.value * z.value + inst.local_cost[j].value)};
}

Money import_spend(Quantity z, std::size_t i, std::size_t j, const MarketInstance& inst) {
  if (i >= inst.suppliers() || j >= inst.markets()) {
    throw ValidationError("supplier or market index out of range");
  }
  const Money t = inst.cost(i, j);
  if (z.value < 0 || z.value > inst.capacity[i].value) {
    throw ValidationError("import purchase outside [0, s_i]");
  }
  return Money{z.value * (inst.congestion.value * z.value + t.value)};
}

Money valuation(std::span<const std::int64_t> caps, std::size_t j, const MarketInstance& inst) {
  if (j >= inst.markets()) throw ValidationError("market index out of range");
  if (caps.size() != inst.suppliers()) throw ValidationError("caps must have one entry per supplier");
  for (std::size_t i = 0; i < caps.size(); ++i) {
    if (caps[i] < 0 || caps[i] > inst.capacity[i].value) {
      throw ValidationError("cap outside [0, s_i]");
    }
    if (caps[i] > 0 && !inst.is_allowed(i, j)) {
      throw ValidationError("positive cap on masked pair");
    }
  }
  return Money{indirect_utility(inst, j, caps, {})};
}

DemandBundle demand_bundle(std::size_t j, const MarkupVector& markups, const MarketInstance& inst) {
  if (j >= inst.markets()) throw ValidationError("market index out of range");
  if (markups.size() != inst.suppliers()) {
    throw ValidationError("markup vector must have one entry per supplier");
  }
  for (auto p : markups) {
    if (p.value < 0) throw ValidationError("markups must be >= 0");
  }
  const auto caps = capacities(inst);
  const auto p = raw(markups);
  const auto sources = market_sources(inst, j, caps, p);
  const std::int64_t d = inst.demand[j].value;
  const Fill fill = cheapest_fill(sources, inst.congestion.value, d);

  DemandBundle bundle;
  bundle.imports.assign(fill.units.begin() + 1, fill.units.end());
  bundle.utility = Money{d * (inst.congestion.value * d + inst.local_cost[j].value) - fill.cost};
  return bundle;
}

Money max_local_marginal(const MarketInstance& inst) {
  std::int64_t worst = 0;
  for (std::size_t j = 0; j < inst.markets(); ++j) {
    worst = std::max(worst, inst.local_cost[j].value +
                                inst.congestion.value * (2 * inst.demand[j].value - 1));
  }
  return Money{worst};
}

std::int64_t iteration_cap(const MarketInstance& inst) {
  return static_cast<std::int64_t>(inst.suppliers()) * (max_local_marginal(inst).value + 1);
}

Money lyapunov(const MarketInstance& inst, const MarkupVector& markups) {
  require_valid(inst);
  if (markups.size() != inst.suppliers()) {
    throw ValidationError("markup vector must have one entry per supplier");
  }
  const auto caps = capacities(inst);
  return Money{lyapunov_raw(inst, caps, raw(markups))};
}

Equilibrium run_english_auction(const MarketInstance& inst, const TickObserver& on_tick) {
  require_valid(inst);
  const std::size_t m = inst.suppliers();
  const std::size_t n = inst.markets();
  if (m > kMaxAuctionSuppliers) {
    throw ValidationError("too many suppliers for the ascending auction");
  }
  const auto caps = capacities(inst);
  const std::size_t subsets = std::size_t{1} << m;

  // Markets only react to the suppliers allowed to serve them.
  std::vector<std::size_t> reach(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      if (inst.is_allowed(i, j)) reach[j] |= std::size_t{1} << i;
    }
  }

  std::vector<std::int64_t> p(m, 0);
  std::vector<std::int64_t> trial(m, 0);
  std::vector<std::int64_t> score(subsets, 0);
  std::vector<std::vector<std::int64_t>> memo(n, std::vector<std::int64_t>(subsets, 0));
  std::vector<std::vector<std::uint8_t>> known(n, std::vector<std::uint8_t>(subsets, 0));
  const std::int64_t cap = iteration_cap(inst);

  for (std::int64_t tick = 0;; ++tick) {
    for (auto& k : known) std::fill(k.begin(), k.end(), 0);

    // score[S] = L(p + 1_S) - sum_i s_i p_i
    for (std::size_t set = 0; set < subsets; ++set) {
      std::int64_t value = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const bool raised = (set >> i) & 1U;
        trial[i] = p[i] + (raised ? 1 : 0);
        if (raised) value += caps[i];
      }
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t key = set & reach[j];
        if (!known[j][key]) {
          memo[j][key] = indirect_utility(inst, j, caps, trial);
          known[j][key] = 1;
        }
        value += memo[j][key];
      }
      score[set] = value;
    }

    const std::int64_t best = *std::min_element(score.begin(), score.end());
    std::size_t raise = subsets - 1;
    for (std::size_t set = 0; set < subsets; ++set) {
      if (score[set] == best) raise &= set;
    }
    // Minimizers of a submodular set function are closed under intersection.
    if (score[raise] != best) throw RuntimeFailure("steepest ascent direction is not unique");
    if (raise == 0) break;

    if (tick + 1 > cap) {
      throw RuntimeFailure("ascending auction exceeded its iteration cap");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if ((raise >> i) & 1U) ++p[i];
    }
    if (on_tick) {
      MarkupVector snapshot;
      for (auto v : p) snapshot.emplace_back(v);
      on_tick(snapshot);
    }
  }

  Equilibrium eq;
  for (auto v : p) eq.markups.emplace_back(v);
  eq.flows = allocate(inst, eq.markups);
  return eq;
}

VerificationReport verify_equilibrium(const MarketInstance& inst, const Equilibrium& eq) {
  VerificationReport report;
  const std::size_t m = inst.suppliers();
  const std::size_t n = inst.markets();

  if (!validate_instance(inst).empty()) {
    report.structure_ok = false;
    report.witnesses.emplace_back("instance is invalid");
    return report;
  }
  if (eq.markups.size() != m || eq.flows.suppliers() != m || eq.flows.markets() != n) {
    report.structure_ok = false;
    report.witnesses.emplace_back("markup vector or flow matrix has wrong shape");
    return report;
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (eq.markups[i].value < 0) {
      report.structure_ok = false;
      report.witnesses.push_back("negative markup for supplier " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (eq.flows.at(i, j) < 0 || (eq.flows.at(i, j) > 0 && !inst.is_allowed(i, j))) {
        report.structure_ok = false;
        report.witnesses.push_back("invalid flow on pair (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ")");
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (eq.flows.imported(j) > inst.demand[j].value) {
      report.structure_ok = false;
      report.witnesses.push_back("market " + std::to_string(j) + " imports beyond its demand");
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (eq.flows.sold(i) > inst.capacity[i].value) {
      report.capacity_ok = false;
      report.witnesses.push_back("condition 1: supplier " + std::to_string(i) + " sells " +
                                 std::to_string(eq.flows.sold(i)) + " > capacity " +
                                 std::to_string(inst.capacity[i].value));
    }
  }

  if (report.structure_ok && report.capacity_ok) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::int64_t> bundle(m);
      std::int64_t paid = 0;
      for (std::size_t i = 0; i < m; ++i) {
        bundle[i] = eq.flows.at(i, j);
        paid += eq.markups[i].value * bundle[i];
      }
      const std::int64_t attained = valuation(bundle, j, inst).value - paid;
      const std::int64_t optimum = demand_bundle(j, eq.markups, inst).utility.value;
      if (attained != optimum) {
        report.utility_ok = false;
        report.witnesses.push_back("condition 2: market " + std::to_string(j) + " utility " +
                                   std::to_string(attained) + " < optimum " +
                                   std::to_string(optimum));
      }
    }
  } else {
    report.utility_ok = false;
    report.witnesses.emplace_back("condition 2: not checked on infeasible flows");
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (eq.flows.sold(i) == 0 && eq.markups[i].value != 0) {
      report.clearance_ok = false;
      report.witnesses.push_back("condition 3: supplier " + std::to_string(i) +
                                 " unsold at markup " + std::to_string(eq.markups[i].value));
    }
  }
  return report;
}

}  // namespace dapmap
