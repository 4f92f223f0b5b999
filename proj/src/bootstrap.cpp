#include "dapmap/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dapmap/error.hpp"

namespace dapmap {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) total += a[k] * b[k];
  return total;
}

std::int64_t to_units(double mt, double unit_mt) {
  return static_cast<std::int64_t>(std::llround(mt / unit_mt));
}

std::size_t year_index(const TradeHistory& history, int year) {
  const auto it = std::find(history.years.begin(), history.years.end(), year);
  if (it == history.years.end()) throw ValidationError("reference year not in trade history");
  return static_cast<std::size_t>(it - history.years.begin());
}

std::vector<double> market_demand(const TradeHistory& history, std::size_t year) {
  const Grid<double>& flows = history.flows[year];
  std::vector<double> demand = history.local[year];
  for (std::size_t i = 0; i < flows.rows(); ++i) {
    for (std::size_t j = 0; j < flows.cols(); ++j) demand[j] += flows(i, j);
  }
  return demand;
}

std::vector<double> nominal_shares(std::span<const double> demand) {
  const double total = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (total <= 0.0) throw ValidationError("global demand must be positive");
  std::vector<double> shares;
  for (double d : demand) shares.push_back(d / total);
  return shares;
}

void check_history(const TradeHistory& history, const InversionSettings& settings) {
  const std::size_t years = history.years.size();
  if (history.flows.size() != years || history.local.size() != years) {
    throw ValidationError("trade history tables must cover every year");
  }
  if (settings.reference_market >= history.markets.size()) {
    throw ValidationError("reference market out of range");
  }
  for (std::size_t y = 0; y < years; ++y) {
    if (history.flows[y].rows() != history.suppliers.size() ||
        history.flows[y].cols() != history.markets.size() ||
        history.local[y].size() != history.markets.size()) {
      throw ValidationError("trade history table has wrong shape");
    }
    if (history.local[y][settings.reference_market] <= 0.0) {
      throw ValidationError("reference market inactive in year " +
                            std::to_string(history.years[y]));
    }
  }
}

}  // namespace

std::vector<double> smooth_cma3(std::span<const double> series) {
  if (series.size() < 3) throw ValidationError("moving average needs at least 3 values");
  std::vector<double> out;
  out.reserve(series.size() - 2);
  for (std::size_t k = 1; k + 1 < series.size(); ++k) {
    out.push_back((series[k - 1] + series[k] + series[k + 1]) / 3.0);
  }
  return out;
}

RegionSeries smooth_series(const RegionSeries& raw) {
  if (raw.y.size() != raw.years.size() || raw.x.size() != raw.years.size() ||
      raw.z.size() != raw.years.size()) {
    throw ValidationError("region series " + raw.region + " has misaligned columns");
  }
  RegionSeries out;
  out.region = raw.region;
  out.y = smooth_cma3(raw.y);
  out.x = smooth_cma3(raw.x);
  out.z = smooth_cma3(raw.z);
  out.years.assign(raw.years.begin() + 1, raw.years.end() - 1);
  return out;
}

TwoStageFit fit_two_stage(const RegionSeries& series) {
  const auto& y = series.y;
  const auto& x = series.x;
  const auto& z = series.z;
  if (y.size() != x.size() || x.size() != z.size() || z.empty()) {
    throw ValidationError("region series must have aligned, nonempty columns");
  }
  const double zz = dot(z, z);
  const double zx = dot(z, x);
  if (zz == 0.0 || zx == 0.0) throw ValidationError("degenerate series for region " + series.region);
  TwoStageFit fit;
  fit.alpha = zx / zz;
  fit.beta = dot(z, y) / zx;
  for (std::size_t k = 0; k < z.size(); ++k) {
    fit.u2.push_back(x[k] - fit.alpha * z[k]);
    fit.u1.push_back(y[k] - fit.beta * x[k]);
  }
  return fit;
}

DemandDraw draw_demand(const RegionSeries& series, const TwoStageFit& fit, double z_scenario,
                       double unit_mt, RandomStream& rng) {
  const auto& z = series.z;
  const std::size_t p = z.size();
  std::vector<double> xs(p);
  std::vector<double> ys(p);
  const double zz = dot(z, z);
  DemandDraw draw;
  for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
    for (std::size_t k = 0; k < p; ++k) {
      xs[k] = fit.alpha * z[k] + rng.rademacher() * fit.u2[k];
    }
    for (std::size_t k = 0; k < p; ++k) {
      ys[k] = fit.beta * xs[k] + rng.rademacher() * fit.u1[k];
    }
    const double zx = dot(z, xs);
    if (zx != 0.0) {
      const double alpha = zx / zz;
      const double beta = dot(z, ys) / zx;
      draw.mt = beta * alpha * z_scenario;
      const std::int64_t units = to_units(draw.mt, unit_mt);
      if (units >= 1) {
        draw.units = Quantity{units};
        return draw;
      }
    }
    ++draw.rejections;
  }
  throw RuntimeFailure("demand draw for region " + series.region +
                       " rejected more than the redraw budget allows");
}

std::vector<DemandDraw> wild_bootstrap_demand(const RegionSeries& series, double z_scenario,
                                              std::size_t replications, std::uint64_t seed,
                                              double unit_mt, std::size_t region_index) {
  if (replications == 0) throw ValidationError("need at least one replication");
  if (unit_mt <= 0.0) throw ValidationError("quantity unit must be positive");
  const TwoStageFit fit = fit_two_stage(series);
  std::vector<DemandDraw> draws;
  draws.reserve(replications);
  for (std::size_t b = 0; b < replications; ++b) {
    RandomStream rng(seed, b, StreamPurpose::Demand, region_index);
    draws.push_back(draw_demand(series, fit, z_scenario, unit_mt, rng));
  }
  return draws;
}

CapacityModel estimate_capacity_model(const std::vector<std::vector<double>>& sales,
                                      std::span<const double> global_demand, CapacityBase base) {
  if (global_demand.empty()) throw ValidationError("no observed years for capacity model");
  const double years = static_cast<double>(global_demand.size());
  const double mean_demand =
      std::accumulate(global_demand.begin(), global_demand.end(), 0.0) / years;
  const double base_demand = base == CapacityBase::ObservedMean ? mean_demand : global_demand.back();
  if (base_demand <= 0.0) throw ValidationError("observed global demand must be positive");

  CapacityModel model;
  for (const auto& row : sales) {
    if (row.size() != global_demand.size()) {
      throw ValidationError("supplier sales must cover every observed year");
    }
    const double mean_sales = std::accumulate(row.begin(), row.end(), 0.0) / years;
    const double share = mean_sales / base_demand;
    model.share.push_back(share);
    for (std::size_t y = 0; y < row.size(); ++y) {
      model.deviation_pool.push_back(row[y] - share * global_demand[y]);
    }
  }
  return model;
}

std::vector<Quantity> sample_capacity(double global_demand_mt, std::span<const double> shares,
                                      std::span<const double> deviation_pool, double unit_mt,
                                      RandomStream& rng) {
  if (deviation_pool.empty()) throw ValidationError("capacity deviation pool is empty");
  if (unit_mt <= 0.0) throw ValidationError("quantity unit must be positive");
  std::vector<Quantity> out;
  out.reserve(shares.size());
  for (double share : shares) {
    if (share < 0.0) throw ValidationError("supplier shares must be >= 0");
    const double delta = deviation_pool[rng.pick(deviation_pool.size())];
    const double mt = share * global_demand_mt + rng.rademacher() * delta;
    out.emplace_back(std::max<std::int64_t>(1, to_units(mt, unit_mt)));
  }
  return out;
}

Grid<std::optional<double>> relative_trade_costs(const TradeHistory& history, std::size_t year,
                                                 const InversionSettings& settings) {
  check_history(history, settings);
  const std::vector<double> demand = market_demand(history, year);
  const double total = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (total <= 0.0) throw ValidationError("global demand must be positive");
  const double a = settings.theta / total;

  std::vector<double> price(demand.size());
  for (std::size_t j = 0; j < demand.size(); ++j) {
    const double c = 1.0 - a * demand[j];
    price[j] = a * history.local[year][j] + c;
  }
  const double reference = price[settings.reference_market];

  const Grid<double>& flows = history.flows[year];
  Grid<std::optional<double>> rel(flows.rows(), flows.cols());
  for (std::size_t i = 0; i < flows.rows(); ++i) {
    for (std::size_t j = 0; j < flows.cols(); ++j) {
      if (flows(i, j) > 0.0) rel(i, j) = price[j] - a * flows(i, j) - reference;
    }
  }
  return rel;
}

std::vector<double> real_shares(std::span<const double> demand,
                                std::span<const double> reference_shares,
                                std::size_t reference_market) {
  std::vector<double> shares = nominal_shares(demand);
  if (shares[reference_market] <= 0.0 || reference_shares[reference_market] <= 0.0) {
    throw ValidationError("reference market has no demand");
  }
  const double growth = shares[reference_market] / reference_shares[reference_market];
  for (double& s : shares) s /= growth;
  return shares;
}

CostChanges infer_relative_trade_costs(const TradeHistory& history,
                                       const InversionSettings& settings) {
  check_history(history, settings);
  const std::size_t ref_year = year_index(history, settings.reference_year);
  const auto ref_costs = relative_trade_costs(history, ref_year, settings);
  const auto ref_shares = nominal_shares(market_demand(history, ref_year));

  CostChanges changes;
  for (std::size_t y = 0; y < history.years.size(); ++y) {
    if (y == ref_year) continue;
    const auto costs = relative_trade_costs(history, y, settings);
    const auto shares = real_shares(market_demand(history, y), ref_shares, settings.reference_market);
    for (std::size_t i = 0; i < costs.rows(); ++i) {
      for (std::size_t j = 0; j < costs.cols(); ++j) {
        if (!costs(i, j) || !ref_costs(i, j)) continue;
        changes.w.push_back(*costs(i, j) - *ref_costs(i, j));
        changes.v.push_back(shares[j] - ref_shares[j]);
      }
    }
  }
  return changes;
}

Grid<std::optional<double>> base_trade_costs(const TradeHistory& history,
                                             const InversionSettings& settings) {
  check_history(history, settings);
  const std::size_t m = history.suppliers.size();
  const std::size_t n = history.markets.size();
  Grid<double> sum(m, n, 0.0);
  Grid<int> count(m, n, 0);
  for (std::size_t y = 0; y < history.years.size(); ++y) {
    const auto costs = relative_trade_costs(history, y, settings);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!costs(i, j)) continue;
        sum(i, j) += *costs(i, j);
        ++count(i, j);
      }
    }
  }
  Grid<std::optional<double>> base(m, n);
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (count(i, j) == 0) continue;
      base(i, j) = sum(i, j) / count(i, j);
      lowest = std::min(lowest, *base(i, j));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (base(i, j)) *base(i, j) -= lowest;
    }
  }
  return base;
}

std::vector<double> observed_market_shares(const TradeHistory& history, int year) {
  return nominal_shares(market_demand(history, year_index(history, year)));
}

TradeCostFit fit_trade_cost_regression(std::span<const double> w, std::span<const double> v) {
  if (w.size() != v.size()) throw ValidationError("w and v must have equal length");
  const double vv = dot(v, v);
  if (vv == 0.0) throw ValidationError("degenerate regressor: v is all zeros");
  TradeCostFit fit;
  fit.gamma = dot(v, w) / vv;
  fit.v.assign(v.begin(), v.end());
  for (std::size_t k = 0; k < w.size(); ++k) fit.residuals.push_back(w[k] - fit.gamma * v[k]);
  return fit;
}

std::vector<double> scenario_share_changes(std::span<const Quantity> demand,
                                           std::span<const double> base_shares,
                                           std::size_t reference_market) {
  if (demand.size() != base_shares.size()) {
    throw ValidationError("base shares must cover every market");
  }
  std::vector<double> d;
  for (auto q : demand) d.push_back(static_cast<double>(q.value));
  auto shares = real_shares(d, base_shares, reference_market);
  for (std::size_t j = 0; j < shares.size(); ++j) shares[j] -= base_shares[j];
  return shares;
}

Grid<std::optional<Money>> sample_trade_costs(const Grid<std::optional<double>>& base,
                                              std::span<const double> share_change,
                                              const TradeCostFit& fit, std::int64_t money_scale,
                                              RandomStream& rng) {
  if (share_change.size() != base.cols()) {
    throw ValidationError("share changes must cover every market");
  }
  if (fit.residuals.size() != fit.v.size() || fit.residuals.empty()) {
    throw ValidationError("trade cost fit has no residual pool");
  }
  const double vv = dot(fit.v, fit.v);
  double shifted = 0.0;
  for (std::size_t k = 0; k < fit.v.size(); ++k) {
    shifted += fit.v[k] * rng.rademacher() * fit.residuals[k];
  }
  const double gamma = fit.gamma + shifted / vv;

  Grid<std::optional<Money>> out(base.rows(), base.cols());
  for (std::size_t i = 0; i < base.rows(); ++i) {
    for (std::size_t j = 0; j < base.cols(); ++j) {
      if (!base(i, j)) continue;
      const double noise = fit.residuals[rng.pick(fit.residuals.size())] * rng.rademacher();
      const double t = std::max(0.0, *base(i, j) + gamma * share_change[j] + noise);
      out(i, j) = Money{std::llround(t * static_cast<double>(money_scale))};
    }
  }
  return out;
}

LocalCosts calibrate_local_costs(std::span<const Quantity> demand, double theta,
                                 std::int64_t money_scale) {
  if (demand.empty()) throw ValidationError("no markets to calibrate");
  if (theta < 0.0) throw ValidationError("theta must be >= 0");
  if (money_scale <= 0) throw ValidationError("money scale must be positive");
  std::int64_t total = 0;
  for (auto d : demand) {
    if (d.value < 1) throw ValidationError("demand must be >= 1 unit");
    total += d.value;
  }
  LocalCosts costs;
  costs.congestion = Money{std::llround(theta * static_cast<double>(money_scale) /
                                        static_cast<double>(total))};
  for (std::size_t j = 0; j < demand.size(); ++j) {
    const Money c{money_scale - costs.congestion.value * demand[j].value};
    if (c.value <= 0) {
      throw ValidationError("theta too large: local cost of market " + std::to_string(j) +
                            " would be <= 0");
    }
    costs.local_cost.push_back(c);
  }
  return costs;
}

}  // namespace dapmap
