#pragma once

// Bootstrap replication of the exogenous inputs: scenario demand from a
// two-stage regression, supplier capacities, trade costs, and the local
// cost structure.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dapmap/market.hpp"
#include "dapmap/rng.hpp"

namespace dapmap {

/// Redraws allowed per sampled value before a draw is declared impossible.
inline constexpr int kMaxRedraws = 100;

/// Span-3 central moving average; drops both endpoints.
std::vector<double> smooth_cma3(std::span<const double> series);

/// Observed regional series. y: DAP/MAP apparent consumption, x: total P2O5
/// fertilizer consumption, z: P2O5 use on crops (all Mt, aligned by year).
struct RegionSeries {
  std::string region;
  std::vector<int> years;
  std::vector<double> y;
  std::vector<double> x;
  std::vector<double> z;
};

/// Smooths all three series and trims the years accordingly.
RegionSeries smooth_series(const RegionSeries& raw);

/// y = beta x + u1, x = alpha z + u2, estimated with z as the instrument.
struct TwoStageFit {
  double alpha{0.0};
  double beta{0.0};
  std::vector<double> u1;
  std::vector<double> u2;

  double predict(double z_scenario) const { return beta * alpha * z_scenario; }
};

TwoStageFit fit_two_stage(const RegionSeries& series);

/// One bootstrap demand value: the Mt draw and its quantized unit count.
struct DemandDraw {
  double mt{0.0};
  Quantity units{0};
  int rejections{0};
};

/// Draws one scenario demand. Wild weights perturb both residual vectors,
/// the two stages are re-fitted on the simulated data, and the prediction
/// at z_scenario is quantized by `unit_mt`. Draws below one unit are
/// redrawn up to kMaxRedraws times.
DemandDraw draw_demand(const RegionSeries& series, const TwoStageFit& fit, double z_scenario,
                       double unit_mt, RandomStream& rng);

/// B independent demand draws for one region. Replication b uses the
/// stream (seed, b, Demand, region_index).
std::vector<DemandDraw> wild_bootstrap_demand(const RegionSeries& series, double z_scenario,
                                              std::size_t replications, std::uint64_t seed,
                                              double unit_mt, std::size_t region_index = 0);

/// Which global demand a supplier's mean sales are scaled against.
enum class CapacityBase { ObservedMean, LatestYear };

struct CapacityModel {
  std::vector<double> share;           // per supplier, of global demand
  std::vector<double> deviation_pool;  // Mt, pooled over suppliers and years
};

/// sales[i][year] and global_demand[year], Mt, aligned by year.
CapacityModel estimate_capacity_model(const std::vector<std::vector<double>>& sales,
                                      std::span<const double> global_demand, CapacityBase base);

/// s_i = share_i * D + w * delta with delta drawn from the pool and w a
/// wild weight; quantized by `unit_mt` and clamped below at one unit.
std::vector<Quantity> sample_capacity(double global_demand_mt, std::span<const double> shares,
                                      std::span<const double> deviation_pool, double unit_mt,
                                      RandomStream& rng);

/// Observed flows and local supply, Mt, by year.
struct TradeHistory {
  std::vector<std::string> suppliers;
  std::vector<std::string> markets;
  std::vector<int> years;
  std::vector<Grid<double>> flows;          // [year](supplier, market)
  std::vector<std::vector<double>> local;   // [year][market]
};

struct InversionSettings {
  double theta{0.5};
  std::size_t reference_market{0};
  int reference_year{0};
};

/// Year-over-year observations for the trade-cost regression.
struct CostChanges {
  std::vector<double> w;  // change in relative trade cost versus the reference year
  std::vector<double> v;  // change in real market share versus the reference year
};

/// Relative trade cost of each active flow per year: pi_j - a x_ij minus the
/// reference market's price pi_ref, where pi_j = a x_o^j + c_oj and (a, c_o)
/// follow the unit-price calibration of that year's observed demand.
Grid<std::optional<double>> relative_trade_costs(const TradeHistory& history, std::size_t year,
                                                 const InversionSettings& settings);

/// Builds (w, v) over pairs active in both a year and the reference year.
CostChanges infer_relative_trade_costs(const TradeHistory& history,
                                       const InversionSettings& settings);

/// Base trade costs: mean relative cost over the years a pair was active,
/// shifted so the cheapest pair costs 0. Pairs never active are masked.
Grid<std::optional<double>> base_trade_costs(const TradeHistory& history,
                                             const InversionSettings& settings);

/// Nominal market shares of one year of demand, adjusted by the reference
/// market's share growth relative to `reference_shares`.
std::vector<double> real_shares(std::span<const double> demand, std::span<const double> reference_shares,
                                std::size_t reference_market);

/// Nominal demand shares (local supply plus imports) in an observed year.
std::vector<double> observed_market_shares(const TradeHistory& history, int year);

/// w = gamma v + e, no intercept.
struct TradeCostFit {
  double gamma{0.0};
  std::vector<double> residuals;
  std::vector<double> v;
  std::string reference_market;
  int reference_year{0};
};

TradeCostFit fit_trade_cost_regression(std::span<const double> w, std::span<const double> v);

/// Scenario share change per market: real scenario share minus base share.
std::vector<double> scenario_share_changes(std::span<const Quantity> demand,
                                           std::span<const double> base_shares,
                                           std::size_t reference_market);

/// One trade-cost table: t = base + gamma* dshare_j + w e, where gamma* is
/// re-fitted on wild-bootstrap data and e is drawn from the residual pool.
/// Clamped at 0, quantized to minor units; masked cells stay empty.
Grid<std::optional<Money>> sample_trade_costs(const Grid<std::optional<double>>& base,
                                              std::span<const double> share_change,
                                              const TradeCostFit& fit, std::int64_t money_scale,
                                              RandomStream& rng);

struct LocalCosts {
  Money congestion{0};
  std::vector<Money> local_cost;
};

/// a = round(theta * scale / D), c_oj = scale - a d_j, so that a d_j + c_oj
/// equals the unit market price exactly. Throws ValidationError when some
/// c_oj would be <= 0.
LocalCosts calibrate_local_costs(std::span<const Quantity> demand, double theta,
                                 std::int64_t money_scale);

}  // namespace dapmap
