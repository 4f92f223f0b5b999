#pragma once

// End-to-end scenario experiment: calibrate once, draw B replications of the
// market inputs, solve each with the ascending auction, verify, and reduce
// the per-replication metrics to mean/SD tables.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "dapmap/bootstrap.hpp"
#include "dapmap/market.hpp"
#include "dapmap/metrics.hpp"

namespace dapmap {

struct ExperimentConfig {
  std::string scenario{"BAU"};
  std::size_t replications{1000};
  std::uint64_t seed{1};
  std::int64_t money_scale{kDefaultMoneyScale};
  double quantity_unit_mt{0.001};  // 1 unit = 1 kt
  double theta{0.5};
  std::string reference_market;
  int reference_year{0};
  CapacityBase capacity_base{CapacityBase::ObservedMean};
  std::size_t workers{1};  // never affects results

  std::filesystem::path series_path;       // region,year,y,x,z
  std::filesystem::path scenario_path;     // region,z
  std::filesystem::path sales_path;        // supplier,year,sales_mt
  std::filesystem::path flows_path;        // supplier,region,year,flow_mt
  std::filesystem::path local_path;        // region,year,local_mt
  std::filesystem::path output_dir{"out"};
};

/// Parses `key = value` lines; '#' starts a comment. Relative paths are
/// resolved against `base_dir`. Unknown keys are an error.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ValidationError on B = 0, nonpositive scales, negative theta, or
/// zero workers.
void validate_config(const ExperimentConfig& config);

/// Config as `key = value` lines in a fixed order, without the worker count.
std::vector<std::string> describe_config(const ExperimentConfig& config);

/// Everything fitted from the observed data. Immutable during a run.
struct Calibration {
  std::vector<std::string> markets;
  std::vector<std::string> suppliers;
  std::vector<RegionSeries> series;  // smoothed, in market order
  std::vector<TwoStageFit> demand_fits;
  std::vector<double> scenario_z;
  CapacityModel capacity;
  Grid<std::optional<double>> base_costs;  // relative units; empty = masked
  std::vector<double> base_shares;
  TradeCostFit cost_fit;
  std::size_t reference_market{0};
};

/// Reads the input tables named by the config and fits every model.
Calibration calibrate_experiment(const ExperimentConfig& config);

/// Writes demand_fits, capacity_model, trade_cost_fit and base_trade_costs
/// CSVs describing the fitted models.
void emit_calibration(const Calibration& calibration, const ExperimentConfig& config,
                      const std::filesystem::path& outdir);

/// One replication's inputs, assembled into an auction instance.
struct ReplicationDraw {
  std::size_t replication{0};
  std::vector<double> demand_mt;
  MarketInstance instance;
  int rejections{0};
};

ReplicationDraw draw_replication(const Calibration& calibration, const ExperimentConfig& config,
                                 std::size_t replication);

struct ReplicationResult {
  ReplicationDraw draw;
  Equilibrium equilibrium;
  std::vector<MarketStructureRow> markets;
  std::vector<SupplierStructureRow> suppliers;
};

/// Draws, solves and verifies one replication. Throws RuntimeFailure when
/// the equilibrium fails verification.
ReplicationResult run_replication(const Calibration& calibration, const ExperimentConfig& config,
                                  std::size_t replication);

struct ScenarioReport {
  std::string scenario;
  std::vector<std::string> markets;
  std::vector<std::string> suppliers;
  std::vector<SampleStats> demand;           // Mt, per market
  std::vector<SampleStats> concentration;    // per market
  std::vector<SampleStats> local_share;      // per market
  std::vector<SampleStats> diversification;  // per supplier, over replications where defined
  std::vector<SampleStats> global_share;     // per supplier
  EntryFloorSummary trade_costs;             // relative units
  std::vector<ReplicationResult> replications;
  std::size_t rejections{0};
};

/// Runs every replication (in parallel when workers > 1) and reduces the
/// results in replication order.
ScenarioReport run_experiment(const Calibration& calibration, const ExperimentConfig& config);
ScenarioReport run_experiment(const ExperimentConfig& config);

/// Runs fn(0..count-1) on `workers` threads. The first failure by index is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

/// Writes demand, concentration, local_share, diversification,
/// global_share, trade_cost_mean, trade_cost_sd, entry_floor and
/// replications CSVs plus manifest.txt. Throws ValidationError on an empty
/// report and RuntimeFailure on an unwritable directory.
void emit_tables(const ScenarioReport& report, const ExperimentConfig& config,
                 const std::filesystem::path& outdir);

/// Shrinks an instance so the brute-force oracle can solve it: quantities
/// are divided by a common factor (rounded up) until every s_i, d_j <=
/// max_quantity, and money by a common factor (rounded to nearest, local
/// costs kept >= 1) until every cost <= max_money.
MarketInstance downscale_instance(const MarketInstance& inst, std::int64_t max_quantity,
                                  std::int64_t max_money);

}  // namespace dapmap
