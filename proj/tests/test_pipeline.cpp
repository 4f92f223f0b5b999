#include "dapmap/pipeline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "dapmap/csv.hpp"
#include "dapmap/error.hpp"
#include "support.hpp"

namespace dapmap {
namespace {

namespace fs = std::filesystem;
using testing::fixture;

TEST(Conversion, ProductFactors) {
  EXPECT_DOUBLE_EQ(convert_to_p2o5(100.0, ProductKind::Dap), 46.0);
  EXPECT_DOUBLE_EQ(convert_to_p2o5(100.0, ProductKind::Map), 52.0);
  EXPECT_DOUBLE_EQ(convert_to_p2o5(100.0, ProductKind::MapChina), 44.0);
  EXPECT_DOUBLE_EQ(convert_to_p2o5(100.0, ProductKind::DapMapMix), 49.0);
  EXPECT_DOUBLE_EQ(convert_to_p2o5(1000.0, ProductKind::Dap), 460.0);
}

TEST(Conversion, KindNames) {
  for (auto kind : {ProductKind::Dap, ProductKind::Map, ProductKind::MapChina, ProductKind::DapMapMix}) {
    EXPECT_EQ(parse_product_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_product_kind("TSP"), ValidationError);
}

TEST(Conversion, AppliedOnce) {
  TradeFlowRecord r{2017, "OCP", "Africa", ProductKind::Map, 100.0, false};
  const TradeFlowRecord c = to_p2o5(r);
  EXPECT_TRUE(c.converted);
  EXPECT_DOUBLE_EQ(c.mass, 52.0);
  EXPECT_THROW(to_p2o5(c), ValidationError);
}

TEST(Flows, FixtureMatchesHandAggregation) {
  const fs::path dir = fixture("pipeline");
  const CompiledFlows compiled =
      compile_trade_flows(load_trade_records(dir / "trade.csv"), load_residence_map(dir / "residence.csv"),
                          load_region_map(dir / "regions.csv"), load_domestic_supply(dir / "domestic.csv"));
  EXPECT_EQ(compiled.ignored_records, 1u);

  const CsvTable golden = read_csv(dir / "golden_flows.csv");
  ASSERT_EQ(compiled.flows.size(), golden.rows.size());
  for (const auto& row : golden.rows) {
    const FlowKey key{row[0], row[1], parse_int(row[2], "year")};
    ASSERT_TRUE(compiled.flows.contains(key)) << row[0] << " " << row[1];
    EXPECT_NEAR(compiled.flows.at(key), parse_number(row[3], "flow"), 1e-12);
  }
}

TEST(Flows, DuplicateRecordRejected) {
  const RegionMap regions{{"BRA", "Latin America"}, {"USA", "North America"}};
  const ResidenceMap residence{{"USA", "Mosaic"}};
  const RawTradeRecord r{2017, "BRA", "USA", ProductKind::Dap, 10.0};
  EXPECT_THROW(compile_trade_flows({r, r}, residence, regions, {}), ValidationError);
  RawTradeRecord other_kind = r;
  other_kind.kind = ProductKind::Map;
  EXPECT_NO_THROW(compile_trade_flows({r, other_kind}, residence, regions, {}));
}

TEST(Flows, UnmappedImporterRejected) {
  const RegionMap regions{{"USA", "North America"}};
  const ResidenceMap residence{{"USA", "Mosaic"}};
  const RawTradeRecord r{2017, "XXX", "USA", ProductKind::Dap, 10.0};
  EXPECT_THROW(compile_trade_flows({r}, residence, regions, {}), ValidationError);
}

TEST(Harmonization, LocalSupplyIsConsumptionMinusImports) {
  const FlowTable flows{{{"S", "A", 2017}, 0.3}, {{"T", "A", 2017}, 0.1}, {{"S", "B", 2017}, 0.5}};
  const std::map<RegionYear, double> consumption{{{"A", 2017}, 1.0}, {{"B", 2017}, 0.4}, {{"C", 2017}, 0.2}};
  const LocalSupply s = harmonize_local_supply(flows, consumption);
  EXPECT_NEAR(s.local.at({"A", 2017}), 0.6, 1e-12);
  EXPECT_DOUBLE_EQ(s.local.at({"B", 2017}), 0.0);
  EXPECT_DOUBLE_EQ(s.local.at({"C", 2017}), 0.2);
  ASSERT_EQ(s.residuals.size(), 1u);
  EXPECT_EQ(s.residuals[0].region, "B");
  EXPECT_NEAR(s.residuals[0].excess, 0.1, 1e-12);
}

TEST(Harmonization, MissingConsumptionRejected) {
  const FlowTable flows{{{"S", "A", 2017}, 0.3}};
  EXPECT_THROW(harmonize_local_supply(flows, {}), ValidationError);
}

const ApplicationRate& find_rate(const std::vector<ApplicationRate>& rates, const std::string& country,
                                 const std::string& crop) {
  const auto it = std::find_if(rates.begin(), rates.end(), [&](const ApplicationRate& r) {
    return r.country == country && r.crop == crop;
  });
  if (it == rates.end()) throw std::runtime_error("no rate " + country + "/" + crop);
  return *it;
}

struct RateFixture {
  std::vector<CropUse> use;
  std::vector<CropProduction> production;
  RegionMap regions;
  std::set<std::string> eu;
  std::vector<ApplicationRate> rates;

  RateFixture() {
    const fs::path dir = fixture("pipeline");
    use = load_crop_use(dir / "crop_use.csv");
    production = load_crop_production(dir / "crop_production.csv");
    regions = load_region_map(dir / "regions.csv");
    eu = load_name_list(dir / "eu_members.csv", "country");
    rates = derive_application_rates(use, production, regions, eu);
  }
};

TEST(ApplicationRates, DirectSplitAndImputed) {
  const RateFixture f;
  EXPECT_DOUBLE_EQ(find_rate(f.rates, "USA", "wheat").rate, 50.0);
  EXPECT_DOUBLE_EQ(find_rate(f.rates, "USA", "maize").rate, 12.0);
  EXPECT_DOUBLE_EQ(find_rate(f.rates, "CAN", "wheat").rate, 50.0);
  EXPECT_DOUBLE_EQ(find_rate(f.rates, "IND", "wheat").rate, 40.0);
  EXPECT_DOUBLE_EQ(find_rate(f.rates, "FRA", "wheat").rate, 300.0);
  EXPECT_DOUBLE_EQ(find_rate(f.rates, "DEU", "wheat").rate, 300.0);
  for (const char* c : {"BRA", "ARG", "MAR"}) EXPECT_DOUBLE_EQ(find_rate(f.rates, c, "wheat").rate, 75.0);

  const ApplicationRate& imputed = find_rate(f.rates, "CAN", "maize");
  EXPECT_TRUE(imputed.imputed);
  EXPECT_DOUBLE_EQ(imputed.rate, 12.0);
  EXPECT_FALSE(find_rate(f.rates, "USA", "maize").imputed);
  EXPECT_THROW(find_rate(f.rates, "IND", "maize"), std::runtime_error);
}

TEST(ScenarioUse, FixtureValues) {
  const RateFixture f;
  const auto use = scenario_fertilizer_use(
      f.rates, load_crop_production(fixture("pipeline/scenario_production.csv")), f.regions);
  EXPECT_NEAR(use.at("North America"), 0.1332, 1e-12);
  EXPECT_NEAR(use.at("Latin America"), 0.045, 1e-12);
  EXPECT_NEAR(use.at("South Asia"), 0.04, 1e-12);
  EXPECT_NEAR(use.at("Western and Central Europe"), 0.18, 1e-12);
  EXPECT_NEAR(use.at("Africa"), 0.015, 1e-12);
}

TEST(ScenarioUse, BaseProductionReproducesReportedUse) {
  const RateFixture f;
  std::vector<CropProduction> base;
  for (const auto& p : f.production) {
    if (!(p.country == "IND" && p.crop == "maize")) base.push_back(p);
  }
  const auto use = scenario_fertilizer_use(f.rates, base, f.regions);
  double total = 0.0;
  for (const auto& [region, mt] : use) total += mt;
  double reported_kt = 0.0;
  for (const auto& u : f.use) reported_kt += u.use;
  // Reported use plus the imputed CAN maize (12 kg/t on 50 kt).
  EXPECT_NEAR(total, (reported_kt + 0.6) / 1e3, 1e-12);
}

TEST(ScenarioUse, LinearInProduction) {
  const RateFixture f;
  std::vector<CropProduction> base;
  for (const auto& p : f.production) {
    if (!(p.country == "IND" && p.crop == "maize")) base.push_back(p);
  }
  std::vector<CropProduction> tripled = base;
  for (auto& p : tripled) p.production *= 3.0;
  const auto one = scenario_fertilizer_use(f.rates, base, f.regions);
  const auto three = scenario_fertilizer_use(f.rates, tripled, f.regions);
  for (const auto& [region, mt] : one) EXPECT_NEAR(three.at(region), 3.0 * mt, 1e-12);
}

TEST(ScenarioUse, MissingRateRejected) {
  const RateFixture f;
  EXPECT_THROW(scenario_fertilizer_use(f.rates, f.production, f.regions), ValidationError);
}

TEST(WorldTotals, PublishedRegionalTable) {
  const WorldTotals w = aggregate_world(load_region_scenario_rows(fixture("world_regions.csv")));
  EXPECT_NEAR(w.observed, 41.89, 0.02);
  EXPECT_NEAR(w.bau, 50.40, 0.02);
  EXPECT_NEAR(w.sss, 51.73, 0.02);
  EXPECT_NEAR(w.bau_growth_percent, 20.3, 0.1);
  EXPECT_NEAR(w.sss_growth_percent, 23.5, 0.1);
}

TEST(PipelineConfig, UnknownKeyRejected) {
  EXPECT_THROW(parse_pipeline_config("trades = x.csv\n", "."), ValidationError);
}

TEST(PipelineConfig, NothingToRun) {
  const fs::path out = fs::temp_directory_path() / "dapmap_pipeline_empty";
  EXPECT_THROW(run_pipeline(parse_pipeline_config("", "."), out), ValidationError);
  fs::remove_all(out);
}

TEST(PipelineRun, WritesAllStages) {
  const PipelineConfig config = load_pipeline_config(fixture("pipeline/pipeline.cfg"));
  const fs::path out = fs::temp_directory_path() / "dapmap_pipeline_run";
  fs::remove_all(out);
  const auto files = run_pipeline(config, out);
  for (const char* name : {"flows.csv", "local_supply.csv", "harmonization_residuals.csv",
                           "application_rates.csv", "scenario_use.csv", "world_totals.csv"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
    EXPECT_NE(std::find(files.begin(), files.end(), name), files.end()) << name;
  }
  EXPECT_EQ(read_csv(out / "flows.csv").rows, read_csv(fixture("pipeline/golden_flows.csv")).rows);
  const std::string flows_text = testing::slurp(out / "flows.csv");
  EXPECT_NE(flows_text.find("# pipeline_version dapmap-pipeline/1"), std::string::npos);
  EXPECT_NE(flows_text.find("sha256:"), std::string::npos);

  // A second run is byte-identical.
  const fs::path again = fs::temp_directory_path() / "dapmap_pipeline_run2";
  run_pipeline(config, again);
  for (const auto& name : files) EXPECT_EQ(testing::slurp(out / name), testing::slurp(again / name)) << name;
  fs::remove_all(out);
  fs::remove_all(again);
}

}  // namespace
}  // namespace dapmap
