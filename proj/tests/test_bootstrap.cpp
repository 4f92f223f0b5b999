#include "dapmap/bootstrap.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dapmap/csv.hpp"
#include "dapmap/error.hpp"
#include "dapmap/metrics.hpp"
#include "support.hpp"

namespace dapmap {
namespace {

RegionSeries exact_series() {
  RegionSeries s{"R", {2001, 2002, 2003, 2004}, {}, {}, {1.0, 2.0, 4.0, 3.0}};
  for (double z : s.z) {
    s.x.push_back(3.0 * z);
    s.y.push_back(2.0 * 3.0 * z);
  }
  return s;
}

// Noisy series generated from alpha = 1.2, beta = 0.4.
RegionSeries noisy_series() {
  RegionSeries s{"R", {}, {}, {}, {}};
  RandomStream rng(41, 0, StreamPurpose::Test);
  for (int k = 0; k < 12; ++k) {
    const double z = 5.0 + 0.3 * k;
    const double x = 1.2 * z + 0.2 * (static_cast<double>(rng.pick(1000)) / 1000.0 - 0.5);
    const double y = 0.4 * x + 0.1 * (static_cast<double>(rng.pick(1000)) / 1000.0 - 0.5);
    s.years.push_back(2000 + k);
    s.z.push_back(z);
    s.x.push_back(x);
    s.y.push_back(y);
  }
  return s;
}

TEST(Smoothing, Examples) {
  const std::vector<double> constant{2.5, 2.5, 2.5, 2.5};
  EXPECT_EQ(smooth_cma3(constant), (std::vector<double>{2.5, 2.5}));
  const std::vector<double> ramp{1, 2, 3, 4, 5};
  EXPECT_EQ(smooth_cma3(ramp), (std::vector<double>{2, 3, 4}));
  const std::vector<double> short_series{1, 2};
  EXPECT_THROW(smooth_cma3(short_series), ValidationError);
}

TEST(Smoothing, SeriesYearsTrimmed) {
  const RegionSeries s = smooth_series(exact_series());
  EXPECT_EQ(s.years, (std::vector<int>{2002, 2003}));
  EXPECT_EQ(s.z.size(), 2u);
}

TEST(TwoStage, NoiselessIdentification) {
  const TwoStageFit fit = fit_two_stage(exact_series());
  EXPECT_DOUBLE_EQ(fit.alpha, 3.0);
  EXPECT_DOUBLE_EQ(fit.beta, 2.0);
  for (double u : fit.u1) EXPECT_DOUBLE_EQ(u, 0.0);
  for (double u : fit.u2) EXPECT_DOUBLE_EQ(u, 0.0);
}

TEST(TwoStage, ClosedFormRatios) {
  const RegionSeries s{"R", {1, 2}, {3, 6}, {2, 4}, {1, 2}};
  const TwoStageFit fit = fit_two_stage(s);
  EXPECT_DOUBLE_EQ(fit.alpha, 2.0);
  EXPECT_DOUBLE_EQ(fit.beta, 1.5);
}

TEST(TwoStage, ZeroInstrumentFails) {
  const RegionSeries s{"R", {1, 2, 3}, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  EXPECT_THROW(fit_two_stage(s), ValidationError);
}

TEST(WildBootstrap, ZeroResidualsReproducePointPrediction) {
  const RegionSeries s = exact_series();
  const auto draws = wild_bootstrap_demand(s, 10.0, 50, 7, 1e-3);
  for (const auto& d : draws) {
    EXPECT_EQ(d.mt, draws.front().mt);
    EXPECT_DOUBLE_EQ(d.mt, 60.0);
    EXPECT_EQ(d.units, Quantity{60000});
    EXPECT_EQ(d.rejections, 0);
  }
}

TEST(WildBootstrap, CenteredOnPointPrediction) {
  const RegionSeries s = noisy_series();
  const TwoStageFit fit = fit_two_stage(s);
  const double z_scenario = 9.0;
  const auto draws = wild_bootstrap_demand(s, z_scenario, 1000, 99, 1e-9);
  std::vector<double> mt;
  for (const auto& d : draws) mt.push_back(d.mt);
  const SampleStats st = sample_stats(mt);
  const double se = st.sd / std::sqrt(1000.0);
  EXPECT_GT(st.sd, 0.0);
  EXPECT_LE(std::abs(st.mean - fit.predict(z_scenario)), 3.0 * se);
}

TEST(WildBootstrap, ZeroScenarioExhaustsRedraws) {
  EXPECT_THROW(wild_bootstrap_demand(noisy_series(), 0.0, 1, 1, 1e-3), RuntimeFailure);
}

TEST(WildBootstrap, ZeroReplicationsRejected) {
  EXPECT_THROW(wild_bootstrap_demand(exact_series(), 1.0, 0, 1, 1e-3), ValidationError);
}

TEST(WildBootstrap, StreamsAreKeyedNotSequential) {
  const RegionSeries s = noisy_series();
  const auto all = wild_bootstrap_demand(s, 9.0, 20, 5, 1e-9);
  const TwoStageFit fit = fit_two_stage(s);
  RandomStream rng(5, 17, StreamPurpose::Demand, 0);
  EXPECT_EQ(draw_demand(s, fit, 9.0, 1e-9, rng).mt, all[17].mt);
}

TEST(Capacity, EmptyPoolFails) {
  RandomStream rng(1, 0, StreamPurpose::Capacity);
  const std::vector<double> shares{0.5};
  EXPECT_THROW(sample_capacity(10.0, shares, {}, 1.0, rng), ValidationError);
}

TEST(Capacity, ZeroPoolIsShareTimesDemand) {
  RandomStream rng(1, 0, StreamPurpose::Capacity);
  const std::vector<double> shares{0.25, 0.5};
  const std::vector<double> pool{0.0, 0.0, 0.0};
  const auto s = sample_capacity(40.0, shares, pool, 1.0, rng);
  EXPECT_EQ(s, (std::vector<Quantity>{Quantity{10}, Quantity{20}}));
}

TEST(Capacity, WildDeviationRange) {
  const std::vector<double> shares{0.10};
  const std::vector<double> pool{20.0, -20.0};
  std::set<std::int64_t> seen;
  for (std::uint64_t b = 0; b < 200; ++b) {
    RandomStream rng(3, b, StreamPurpose::Capacity);
    seen.insert(sample_capacity(1000.0, shares, pool, 1.0, rng)[0].value);
  }
  EXPECT_EQ(seen, (std::set<std::int64_t>{80, 120}));
}

TEST(Capacity, ClampedAtOneUnit) {
  const std::vector<double> shares{0.0};
  const std::vector<double> pool{5.0};
  std::set<std::int64_t> seen;
  for (std::uint64_t b = 0; b < 50; ++b) {
    RandomStream rng(4, b, StreamPurpose::Capacity);
    seen.insert(sample_capacity(10.0, shares, pool, 1.0, rng)[0].value);
  }
  EXPECT_EQ(seen, (std::set<std::int64_t>{1, 5}));
}

TEST(Capacity, ModelSharesAndPool) {
  const std::vector<std::vector<double>> sales{{2.0, 4.0}};
  const std::vector<double> demand{10.0, 20.0};
  const CapacityModel mean = estimate_capacity_model(sales, demand, CapacityBase::ObservedMean);
  EXPECT_DOUBLE_EQ(mean.share[0], 0.2);
  EXPECT_NEAR(mean.deviation_pool[0], 0.0, 1e-12);
  EXPECT_NEAR(mean.deviation_pool[1], 0.0, 1e-12);
  const CapacityModel latest = estimate_capacity_model(sales, demand, CapacityBase::LatestYear);
  EXPECT_DOUBLE_EQ(latest.share[0], 0.15);
  EXPECT_NEAR(latest.deviation_pool[0], 0.5, 1e-12);
  EXPECT_NEAR(latest.deviation_pool[1], 1.0, 1e-12);
}

TradeHistory load_inversion_fixture() {
  TradeHistory h;
  h.suppliers = {"S"};
  h.markets = {"A", "B"};
  h.years = {2016, 2017};
  h.flows.assign(2, Grid<double>(1, 2, 0.0));
  h.local.assign(2, std::vector<double>(2, 0.0));
  auto market = [](const std::string& name) { return name == "A" ? 0u : 1u; };
  const CsvTable flows = read_csv(testing::fixture("inversion/flows.csv"));
  for (const auto& row : flows.rows) {
    h.flows[row[2] == "2016" ? 0 : 1](0, market(row[1])) = parse_number(row[3], "flow");
  }
  const CsvTable local = read_csv(testing::fixture("inversion/local_supply.csv"));
  for (const auto& row : local.rows) {
    h.local[row[1] == "2016" ? 0 : 1][market(row[0])] = parse_number(row[2], "local");
  }
  return h;
}

TEST(Inversion, TwoYearFixtureMatchesHandComputation) {
  const TradeHistory h = load_inversion_fixture();
  const InversionSettings settings{0.6, 0, 2016};
  const CostChanges c = infer_relative_trade_costs(h, settings);
  ASSERT_EQ(c.w.size(), 2u);
  EXPECT_NEAR(c.w[0], -0.05, 1e-12);
  EXPECT_NEAR(c.w[1], 0.10, 1e-12);
  EXPECT_NEAR(c.v[0], 0.0, 1e-12);
  EXPECT_NEAR(c.v[1], 1.0 / 15.0, 1e-12);

  const TradeCostFit fit = fit_trade_cost_regression(c.w, c.v);
  EXPECT_NEAR(fit.gamma, 1.5, 1e-9);
  EXPECT_NEAR(fit.residuals[0], -0.05, 1e-12);
  EXPECT_NEAR(fit.residuals[1], 0.0, 1e-12);

  const auto base = base_trade_costs(h, settings);
  EXPECT_NEAR(*base(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(*base(0, 1), 0.075, 1e-12);

  const auto shares = observed_market_shares(h, 2016);
  EXPECT_NEAR(shares[0], 2.0 / 3.0, 1e-12);
}

TEST(Inversion, SingleYearHasNoChanges) {
  TradeHistory h = load_inversion_fixture();
  h.years.resize(1);
  h.flows.resize(1);
  h.local.resize(1);
  EXPECT_TRUE(infer_relative_trade_costs(h, {0.6, 0, 2016}).w.empty());
}

TEST(Inversion, ProportionalGrowthGivesZeroRealShareChange) {
  TradeHistory h = load_inversion_fixture();
  for (std::size_t j = 0; j < 2; ++j) {
    h.flows[1](0, j) = 1.5 * h.flows[0](0, j);
    h.local[1][j] = 1.5 * h.local[0][j];
  }
  for (double v : infer_relative_trade_costs(h, {0.6, 0, 2016}).v) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Inversion, InactiveReferenceMarketFails) {
  TradeHistory h = load_inversion_fixture();
  h.local[1][0] = 0.0;
  EXPECT_THROW(infer_relative_trade_costs(h, {0.6, 0, 2016}), ValidationError);
}

TEST(CostRegression, Examples) {
  const std::vector<double> v{1.0, -2.0, 0.5};
  const std::vector<double> w{-2.0, 4.0, -1.0};
  const TradeCostFit exact = fit_trade_cost_regression(w, v);
  EXPECT_DOUBLE_EQ(exact.gamma, -2.0);
  for (double e : exact.residuals) EXPECT_DOUBLE_EQ(e, 0.0);

  const std::vector<double> v2{1.0, -1.0};
  const std::vector<double> w2{-1.0, 1.0};
  EXPECT_DOUBLE_EQ(fit_trade_cost_regression(w2, v2).gamma, -1.0);

  const std::vector<double> zeros{0.0, 0.0};
  EXPECT_THROW(fit_trade_cost_regression(w2, zeros), ValidationError);
}

TEST(CostRegression, ResidualsReproduceObservations) {
  const std::vector<double> v{0.1, -0.3, 0.2, 0.05};
  const std::vector<double> w{0.02, 0.1, -0.07, 0.0};
  const TradeCostFit fit = fit_trade_cost_regression(w, v);
  for (std::size_t k = 0; k < v.size(); ++k) {
    EXPECT_NEAR(fit.gamma * v[k] + fit.residuals[k], w[k], 1e-15);
  }
}

Grid<std::optional<double>> base_grid() {
  Grid<std::optional<double>> base(2, 2);
  base(0, 0) = 0.10;
  base(0, 1) = 0.20;
  base(1, 1) = 0.05;  // (1, 0) masked
  return base;
}

TEST(TradeCostDraw, NoNoiseNoShiftReturnsBase) {
  TradeCostFit fit;
  fit.gamma = -0.5;
  fit.v = {0.1, -0.1};
  fit.residuals = {0.0, 0.0};
  const std::vector<double> no_change{0.0, 0.0};
  RandomStream rng(1, 0, StreamPurpose::TradeCost);
  const auto t = sample_trade_costs(base_grid(), no_change, fit, 100, rng);
  EXPECT_EQ(t(0, 0), Money{10});
  EXPECT_EQ(t(0, 1), Money{20});
  EXPECT_EQ(t(1, 1), Money{5});
  EXPECT_FALSE(t(1, 0).has_value());
}

TEST(TradeCostDraw, GrowingShareLowersCosts) {
  TradeCostFit fit;
  fit.gamma = -0.5;
  fit.v = {0.1, -0.1};
  fit.residuals = {0.0, 0.0};
  const std::vector<double> growth{0.04, 0.02};
  for (std::uint64_t b = 0; b < 20; ++b) {
    RandomStream rng(2, b, StreamPurpose::TradeCost);
    const auto t = sample_trade_costs(base_grid(), growth, fit, 1000, rng);
    EXPECT_LT(t(0, 0)->value, 100);
    EXPECT_LT(t(0, 1)->value, 200);
    EXPECT_LT(t(1, 1)->value, 50);
    EXPECT_FALSE(t(1, 0).has_value());
  }
}

TEST(TradeCostDraw, ClampedAtZero) {
  TradeCostFit fit;
  fit.gamma = -10.0;
  fit.v = {1.0};
  fit.residuals = {0.0};
  const std::vector<double> growth{1.0, 1.0};
  RandomStream rng(1, 0, StreamPurpose::TradeCost);
  const auto t = sample_trade_costs(base_grid(), growth, fit, 100, rng);
  EXPECT_EQ(t(0, 0), Money{0});
}

TEST(LocalCosts, FlatCostsAtZeroTheta) {
  const std::vector<Quantity> d{Quantity{3}, Quantity{9}};
  const LocalCosts c = calibrate_local_costs(d, 0.0, 100);
  EXPECT_EQ(c.congestion, Money{0});
  EXPECT_EQ(c.local_cost, (std::vector<Money>{Money{100}, Money{100}}));
}

TEST(LocalCosts, WorkedExample) {
  // D = 100, theta = 0.5, d = 20: a = 0.005 and c = 0.90 at scale 1000.
  const std::vector<Quantity> d{Quantity{20}, Quantity{80}};
  const LocalCosts c = calibrate_local_costs(d, 0.5, 1000);
  EXPECT_EQ(c.congestion, Money{5});
  EXPECT_EQ(c.local_cost[0], Money{900});
  EXPECT_EQ(c.local_cost[1], Money{600});
  for (std::size_t j = 0; j < d.size(); ++j) {
    EXPECT_EQ(c.congestion * d[j] + c.local_cost[j], Money{1000});
  }
}

TEST(LocalCosts, IdentityAndMonotoneOnRandomDraws) {
  RandomStream rng(8, 0, StreamPurpose::Test);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Quantity> d;
    for (int j = 0; j < 5; ++j) d.emplace_back(testing::uniform(rng, 1, 500));
    const LocalCosts c = calibrate_local_costs(d, 0.5, 100);
    for (std::size_t j = 0; j < d.size(); ++j) {
      ASSERT_EQ(c.congestion * d[j] + c.local_cost[j], Money{100});
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[j] > d[k]) { ASSERT_LE(c.local_cost[j], c.local_cost[k]); }
      }
    }
  }
}

TEST(LocalCosts, ThetaTooLargeFails) {
  const std::vector<Quantity> d{Quantity{50}};
  EXPECT_THROW(calibrate_local_costs(d, 1.5, 100), ValidationError);
}

TEST(RealShares, ReferenceGrowthRemoved) {
  const std::vector<double> demand{10.0, 30.0};
  const std::vector<double> reference{0.5, 0.5};
  const auto s = real_shares(demand, reference, 0);
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 1.5);
}

}  // namespace
}  // namespace dapmap
