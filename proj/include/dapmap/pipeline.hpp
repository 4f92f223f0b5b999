#pragma once

// Ingestion of trade, consumption and crop data into the regional series
// and flow tables used for calibration.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace dapmap {

inline constexpr std::string_view kPipelineVersion = "dapmap-pipeline/1";

enum class ProductKind { Dap, Map, MapChina, DapMapMix };

ProductKind parse_product_kind(std::string_view text);
std::string_view to_string(ProductKind kind);

/// P2O5 content per 100 mass units of product: 46, 52, 44, 49.
int p2o5_percent(ProductKind kind);

/// mass * factor, computed as mass * percent / 100.
double convert_to_p2o5(double mass, ProductKind kind);

/// Country-level import record as reported (product mass, tonnes).
struct RawTradeRecord {
  int year{0};
  std::string importer;  // importing country
  std::string partner;   // exporting country
  ProductKind kind{ProductKind::Dap};
  double mass{0.0};
};

/// Domestic sales of a supplier in its country of residence (product mass,
/// tonnes).
struct DomesticSupplyRecord {
  int year{0};
  std::string supplier;
  std::string country;
  ProductKind kind{ProductKind::Dap};
  double mass{0.0};
};

/// A flow attributed to (supplier, region). Mass is product mass until
/// converted, P2O5 mass afterwards.
struct TradeFlowRecord {
  int year{0};
  std::string supplier;
  std::string region;
  ProductKind kind{ProductKind::Dap};
  double mass{0.0};
  bool converted{false};
};

/// Converts a record to P2O5. Throws ValidationError if already converted.
TradeFlowRecord to_p2o5(TradeFlowRecord record);

using RegionMap = std::map<std::string, std::string>;     // country -> region
using ResidenceMap = std::map<std::string, std::string>;  // exporting country -> supplier

using FlowKey = std::tuple<std::string, std::string, int>;  // supplier, region, year
using FlowTable = std::map<FlowKey, double>;                // Mt P2O5

struct CompiledFlows {
  FlowTable flows;
  std::size_t ignored_records{0};  // partner is not a modeled supplier's residence
};

/// Aggregates converted flows by (supplier, region, year) in Mt P2O5 and
/// adds domestic supply to the region of the supplier's residence country.
/// Throws ValidationError on unmapped countries or duplicate
/// (importer, partner, year, kind) rows.
CompiledFlows compile_trade_flows(const std::vector<RawTradeRecord>& raw,
                                  const ResidenceMap& residence, const RegionMap& regions,
                                  const std::vector<DomesticSupplyRecord>& domestic);

using RegionYear = std::pair<std::string, int>;

struct HarmonizationResidual {
  std::string region;
  int year{0};
  double excess{0.0};  // imports minus consumption, clamped away
};

struct LocalSupply {
  std::map<RegionYear, double> local;  // Mt P2O5
  std::vector<HarmonizationResidual> residuals;
};

/// local = apparent consumption - imports, clamped at 0 with the clamped
/// amount logged. Throws ValidationError when a (region, year) with flows
/// has no consumption value.
LocalSupply harmonize_local_supply(const FlowTable& flows,
                                   const std::map<RegionYear, double>& consumption);

struct ApplicationRate {
  std::string country;
  std::string crop;
  double rate{0.0};  // kg P2O5 per tonne of crop
  bool imputed{false};
};

/// Fertilizer use by crop (kt P2O5) for an entity: a country, "EU", or "ROW".
struct CropUse {
  std::string entity;
  std::string crop;
  double use{0.0};
};

/// Crop production (kt) by country.
struct CropProduction {
  std::string country;
  std::string crop;
  double production{0.0};
};

inline constexpr std::string_view kEuEntity = "EU";
inline constexpr std::string_view kRestOfWorldEntity = "ROW";

/// Application rates by country and crop. Country rows give use/production
/// directly; the EU aggregate is split over members by production; the
/// rest-of-world aggregate is split over regions by regional production of
/// uncovered countries. Remaining producing countries get their region's
/// minimum rate for the crop, flagged as imputed.
std::vector<ApplicationRate> derive_application_rates(const std::vector<CropUse>& use,
                                                      const std::vector<CropProduction>& production,
                                                      const RegionMap& regions,
                                                      const std::set<std::string>& eu_members);

/// Regional fertilizer use (Mt P2O5) implied by rates and scenario crop
/// production. Throws ValidationError on a producing (country, crop) pair
/// without a rate.
std::map<std::string, double> scenario_fertilizer_use(const std::vector<ApplicationRate>& rates,
                                                      const std::vector<CropProduction>& scenario,
                                                      const RegionMap& regions);

/// One row of a regional table with an observed column and two scenario
/// columns.
struct RegionScenarioRow {
  std::string region;
  double observed{0.0};
  double bau{0.0};
  double sss{0.0};
};

struct WorldTotals {
  double observed{0.0};
  double bau{0.0};
  double sss{0.0};
  double bau_growth_percent{0.0};
  double sss_growth_percent{0.0};
};

WorldTotals aggregate_world(const std::vector<RegionScenarioRow>& rows);

// CSV loaders. Column names are documented in the README.
std::vector<RawTradeRecord> load_trade_records(const std::filesystem::path& path);
std::vector<DomesticSupplyRecord> load_domestic_supply(const std::filesystem::path& path);
RegionMap load_region_map(const std::filesystem::path& path);
ResidenceMap load_residence_map(const std::filesystem::path& path);
std::map<RegionYear, double> load_consumption(const std::filesystem::path& path);
std::vector<CropUse> load_crop_use(const std::filesystem::path& path);
std::vector<CropProduction> load_crop_production(const std::filesystem::path& path);
std::set<std::string> load_name_list(const std::filesystem::path& path, std::string_view column);
std::vector<RegionScenarioRow> load_region_scenario_rows(const std::filesystem::path& path);

/// Inputs of one pipeline run. Each stage runs when its inputs are set:
/// flows (trade, residence, regions, optional domestic), harmonization
/// (plus consumption), application rates (crop_use, crop_production,
/// regions, optional eu_members), scenario use (plus scenario_production),
/// and world totals (region_table).
struct PipelineConfig {
  std::filesystem::path trade;
  std::filesystem::path domestic;
  std::filesystem::path regions;
  std::filesystem::path residence;
  std::filesystem::path consumption;
  std::filesystem::path crop_use;
  std::filesystem::path crop_production;
  std::filesystem::path eu_members;
  std::filesystem::path scenario_production;
  std::filesystem::path region_table;
  std::filesystem::path output_dir{"out"};
};

/// Same flat `key = value` format as the experiment config; keys are the
/// field names above. Relative paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Runs every configured stage and writes its tables to `outdir`. Returns
/// the names of the files written.
std::vector<std::string> run_pipeline(const PipelineConfig& config,
                                      const std::filesystem::path& outdir);

}  // namespace dapmap
