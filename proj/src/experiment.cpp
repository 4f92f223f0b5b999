#include "dapmap/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "dapmap/auction.hpp"
#include "dapmap/csv.hpp"
#include "dapmap/error.hpp"
#include "dapmap/pipeline.hpp"

namespace dapmap {
namespace {

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError("config key '" + key + "': not a non-negative integer: '" + text + "'");
  }
  return value;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name,
                     const std::string& what) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("unknown " + what + " '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::string capacity_base_name(CapacityBase base) {
  return base == CapacityBase::ObservedMean ? "observed_mean" : "latest_year";
}

struct SeriesRow {
  double y, x, z;
};

std::map<std::string, std::map<int, SeriesRow>> load_series(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto region = t.column("region"), year = t.column("year"), y = t.column("y"),
             x = t.column("x"), z = t.column("z");
  std::map<std::string, std::map<int, SeriesRow>> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = t.source + " row " + std::to_string(r + 1);
    const int yr = parse_int(row[year], ctx);
    SeriesRow values{parse_number(row[y], ctx), parse_number(row[x], ctx),
                     parse_number(row[z], ctx)};
    if (!out[row[region]].emplace(yr, values).second) {
      throw ValidationError(ctx + ": duplicate region/year");
    }
  }
  return out;
}

SampleStats stats_of(const std::vector<double>& values) {
  if (values.empty()) return {};
  return sample_stats(values);
}

std::string cell(const SampleStats& s, double SampleStats::*field) {
  return s.count == 0 ? std::string{} : format_fixed(s.*field);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  auto resolve = [&](const std::string& value) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base_dir / p;
  };
  for (const auto& [key, value, line] : parse_key_values(text)) {
    const std::string ctx = "config key '" + key + "'";
    if (key == "scenario") {
      config.scenario = value;
    } else if (key == "replications") {
      config.replications = parse_u64(value, key);
    } else if (key == "seed") {
      config.seed = parse_u64(value, key);
    } else if (key == "money_scale") {
      config.money_scale = static_cast<std::int64_t>(parse_u64(value, key));
    } else if (key == "quantity_unit_mt") {
      config.quantity_unit_mt = parse_number(value, ctx);
    } else if (key == "theta") {
      config.theta = parse_number(value, ctx);
    } else if (key == "reference_market") {
      config.reference_market = value;
    } else if (key == "reference_year") {
      config.reference_year = parse_int(value, ctx);
    } else if (key == "capacity_base") {
      if (value == "observed_mean") {
        config.capacity_base = CapacityBase::ObservedMean;
      } else if (value == "latest_year") {
        config.capacity_base = CapacityBase::LatestYear;
      } else {
        throw ValidationError(ctx + ": expected observed_mean or latest_year");
      }
    } else if (key == "workers") {
      config.workers = parse_u64(value, key);
    } else if (key == "series") {
      config.series_path = resolve(value);
    } else if (key == "scenario_z") {
      config.scenario_path = resolve(value);
    } else if (key == "supplier_sales") {
      config.sales_path = resolve(value);
    } else if (key == "flows") {
      config.flows_path = resolve(value);
    } else if (key == "local_supply") {
      config.local_path = resolve(value);
    } else if (key == "output_dir") {
      config.output_dir = resolve(value);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

void validate_config(const ExperimentConfig& config) {
  if (config.replications < 1) throw ValidationError("replications must be >= 1");
  if (config.money_scale < 1) throw ValidationError("money_scale must be positive");
  if (!(config.quantity_unit_mt > 0.0)) throw ValidationError("quantity_unit_mt must be positive");
  if (config.theta < 0.0) throw ValidationError("theta must be >= 0");
  if (config.workers < 1) throw ValidationError("workers must be >= 1");
  if (config.reference_market.empty()) throw ValidationError("reference_market is required");
  if (config.reference_year == 0) throw ValidationError("reference_year is required");
  const std::pair<const char*, const std::filesystem::path*> inputs[] = {
      {"series", &config.series_path},         {"scenario_z", &config.scenario_path},
      {"supplier_sales", &config.sales_path},  {"flows", &config.flows_path},
      {"local_supply", &config.local_path}};
  for (const auto& [key, path] : inputs) {
    if (path->empty()) throw ValidationError(std::string("config key '") + key + "' is required");
    if (!std::filesystem::is_regular_file(*path)) {
      throw ValidationError(std::string("input '") + key + "' not found: " + path->string());
    }
  }
}

std::vector<std::string> describe_config(const ExperimentConfig& config) {
  return {
      "scenario = " + config.scenario,
      "replications = " + std::to_string(config.replications),
      "seed = " + std::to_string(config.seed),
      "money_scale = " + std::to_string(config.money_scale),
      "quantity_unit_mt = " + format_fixed(config.quantity_unit_mt, 9),
      "theta = " + format_fixed(config.theta, 9),
      "reference_market = " + config.reference_market,
      "reference_year = " + std::to_string(config.reference_year),
      "capacity_base = " + capacity_base_name(config.capacity_base),
  };
}

Calibration calibrate_experiment(const ExperimentConfig& config) {
  validate_config(config);
  Calibration cal;

  const auto series = load_series(config.series_path);
  const CsvTable scenario = read_csv(config.scenario_path);
  const auto sc_region = scenario.column("region"), sc_z = scenario.column("z");
  for (std::size_t r = 0; r < scenario.rows.size(); ++r) {
    const auto& row = scenario.rows[r];
    if (std::find(cal.markets.begin(), cal.markets.end(), row[sc_region]) != cal.markets.end()) {
      throw ValidationError(scenario.source + ": region '" + row[sc_region] + "' listed twice");
    }
    cal.markets.push_back(row[sc_region]);
    cal.scenario_z.push_back(
        parse_number(row[sc_z], scenario.source + " row " + std::to_string(r + 1)));
  }
  if (cal.markets.empty()) throw ValidationError("scenario table lists no regions");

  for (const auto& market : cal.markets) {
    const auto it = series.find(market);
    if (it == series.end()) throw ValidationError("no observed series for region '" + market + "'");
    RegionSeries raw{market, {}, {}, {}, {}};
    for (const auto& [year, v] : it->second) {
      raw.years.push_back(year);
      raw.y.push_back(v.y);
      raw.x.push_back(v.x);
      raw.z.push_back(v.z);
    }
    cal.series.push_back(smooth_series(raw));
    cal.demand_fits.push_back(fit_two_stage(cal.series.back()));
  }

  // Supplier sales and the observed global demand they are scaled against.
  const CsvTable sales = read_csv(config.sales_path);
  const auto sa_supplier = sales.column("supplier"), sa_year = sales.column("year"),
             sa_mt = sales.column("sales_mt");
  std::map<std::string, std::map<int, double>> by_supplier;
  std::set<int> sale_years;
  for (std::size_t r = 0; r < sales.rows.size(); ++r) {
    const auto& row = sales.rows[r];
    const std::string ctx = sales.source + " row " + std::to_string(r + 1);
    if (!by_supplier.contains(row[sa_supplier])) cal.suppliers.push_back(row[sa_supplier]);
    const int year = parse_int(row[sa_year], ctx);
    sale_years.insert(year);
    if (!by_supplier[row[sa_supplier]].emplace(year, parse_number(row[sa_mt], ctx)).second) {
      throw ValidationError(ctx + ": duplicate supplier/year");
    }
  }
  if (cal.suppliers.empty()) throw ValidationError("supplier sales table is empty");
  std::vector<double> global_demand;
  for (int year : sale_years) {
    double total = 0.0;
    for (const auto& market : cal.markets) {
      const auto& rows = series.at(market);
      const auto it = rows.find(year);
      if (it == rows.end()) {
        throw ValidationError("sales year " + std::to_string(year) + " missing from series of '" +
                              market + "'");
      }
      total += it->second.y;
    }
    global_demand.push_back(total);
  }
  std::vector<std::vector<double>> sales_matrix;
  for (const auto& supplier : cal.suppliers) {
    std::vector<double> row;
    for (int year : sale_years) {
      const auto it = by_supplier[supplier].find(year);
      if (it == by_supplier[supplier].end()) {
        throw ValidationError("supplier '" + supplier + "' has no sales in " +
                              std::to_string(year));
      }
      row.push_back(it->second);
    }
    sales_matrix.push_back(std::move(row));
  }
  cal.capacity = estimate_capacity_model(sales_matrix, global_demand, config.capacity_base);

  // Observed trade history for the cost inversion.
  const CsvTable flows = read_csv(config.flows_path);
  const CsvTable local = read_csv(config.local_path);
  const auto fl_supplier = flows.column("supplier"), fl_region = flows.column("region"),
             fl_year = flows.column("year"), fl_mt = flows.column("flow_mt");
  const auto lo_region = local.column("region"), lo_year = local.column("year"),
             lo_mt = local.column("local_mt");
  std::set<int> years;
  for (const auto& row : local.rows) years.insert(parse_int(row[lo_year], local.source));
  TradeHistory history;
  history.suppliers = cal.suppliers;
  history.markets = cal.markets;
  history.years.assign(years.begin(), years.end());
  const std::size_t m = cal.suppliers.size();
  const std::size_t n = cal.markets.size();
  history.flows.assign(years.size(), Grid<double>(m, n, 0.0));
  std::vector<std::vector<std::optional<double>>> local_cells(
      years.size(), std::vector<std::optional<double>>(n));
  auto year_slot = [&](int year, const std::string& source) {
    const auto it = std::find(history.years.begin(), history.years.end(), year);
    if (it == history.years.end()) {
      throw ValidationError(source + ": year " + std::to_string(year) + " has no local supply");
    }
    return static_cast<std::size_t>(it - history.years.begin());
  };
  for (std::size_t r = 0; r < local.rows.size(); ++r) {
    const auto& row = local.rows[r];
    const std::string ctx = local.source + " row " + std::to_string(r + 1);
    const std::size_t y = year_slot(parse_int(row[lo_year], ctx), ctx);
    local_cells[y][index_of(cal.markets, row[lo_region], "region")] = parse_number(row[lo_mt], ctx);
  }
  for (std::size_t r = 0; r < flows.rows.size(); ++r) {
    const auto& row = flows.rows[r];
    const std::string ctx = flows.source + " row " + std::to_string(r + 1);
    const std::size_t y = year_slot(parse_int(row[fl_year], ctx), ctx);
    history.flows[y](index_of(cal.suppliers, row[fl_supplier], "supplier"),
                     index_of(cal.markets, row[fl_region], "region")) +=
        parse_number(row[fl_mt], ctx);
  }
  for (std::size_t y = 0; y < years.size(); ++y) {
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j) {
      if (!local_cells[y][j]) {
        throw ValidationError("no local supply for '" + cal.markets[j] + "' in " +
                              std::to_string(history.years[y]));
      }
      row.push_back(*local_cells[y][j]);
    }
    history.local.push_back(std::move(row));
  }

  cal.reference_market = index_of(cal.markets, config.reference_market, "reference market");
  const InversionSettings settings{config.theta, cal.reference_market, config.reference_year};
  cal.base_costs = base_trade_costs(history, settings);
  const CostChanges changes = infer_relative_trade_costs(history, settings);
  cal.cost_fit = fit_trade_cost_regression(changes.w, changes.v);
  cal.cost_fit.reference_market = config.reference_market;
  cal.cost_fit.reference_year = config.reference_year;
  cal.base_shares = observed_market_shares(history, config.reference_year);
  return cal;
}

void emit_calibration(const Calibration& cal, const ExperimentConfig& config,
                      const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec || !std::filesystem::is_directory(outdir)) {
    throw RuntimeFailure("cannot create output directory " + outdir.string());
  }
  const std::vector<std::string> provenance = describe_config(config);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < cal.markets.size(); ++j) {
    const auto& fit = cal.demand_fits[j];
    rows.push_back({cal.markets[j], format_fixed(fit.alpha), format_fixed(fit.beta),
                    format_fixed(cal.scenario_z[j]), format_fixed(fit.predict(cal.scenario_z[j]))});
  }
  write_csv(outdir / "demand_fits.csv", provenance,
            {"region", "alpha", "beta", "scenario_z", "point_prediction_mt"}, rows);

  rows.clear();
  for (std::size_t i = 0; i < cal.suppliers.size(); ++i) {
    rows.push_back({cal.suppliers[i], format_fixed(cal.capacity.share[i])});
  }
  write_csv(outdir / "capacity_model.csv", provenance, {"supplier", "share"}, rows);

  write_csv(outdir / "trade_cost_fit.csv", provenance,
            {"reference_market", "reference_year", "gamma", "observations"},
            {{cal.cost_fit.reference_market, std::to_string(cal.cost_fit.reference_year),
              format_fixed(cal.cost_fit.gamma), std::to_string(cal.cost_fit.v.size())}});

  std::vector<std::string> header{"supplier"};
  header.insert(header.end(), cal.markets.begin(), cal.markets.end());
  rows.clear();
  for (std::size_t i = 0; i < cal.suppliers.size(); ++i) {
    std::vector<std::string> row{cal.suppliers[i]};
    for (std::size_t j = 0; j < cal.markets.size(); ++j) {
      const auto& t = cal.base_costs(i, j);
      row.push_back(t ? format_fixed(*t) : std::string{});
    }
    rows.push_back(std::move(row));
  }
  write_csv(outdir / "base_trade_costs.csv", provenance, header, rows);
}

ReplicationDraw draw_replication(const Calibration& cal, const ExperimentConfig& config,
                                 std::size_t replication) {
  const std::size_t n = cal.markets.size();
  ReplicationDraw draw;
  draw.replication = replication;
  MarketInstance& inst = draw.instance;

  double global_mt = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    RandomStream rng(config.seed, replication, StreamPurpose::Demand, j);
    const DemandDraw d =
        draw_demand(cal.series[j], cal.demand_fits[j], cal.scenario_z[j], config.quantity_unit_mt, rng);
    inst.demand.push_back(d.units);
    draw.demand_mt.push_back(static_cast<double>(d.units.value) * config.quantity_unit_mt);
    draw.rejections += d.rejections;
    global_mt += draw.demand_mt.back();
  }

  RandomStream capacity_rng(config.seed, replication, StreamPurpose::Capacity);
  inst.capacity = sample_capacity(global_mt, cal.capacity.share, cal.capacity.deviation_pool,
                                  config.quantity_unit_mt, capacity_rng);

  const auto share_change = scenario_share_changes(inst.demand, cal.base_shares, cal.reference_market);
  RandomStream cost_rng(config.seed, replication, StreamPurpose::TradeCost);
  inst.trade_cost =
      sample_trade_costs(cal.base_costs, share_change, cal.cost_fit, config.money_scale, cost_rng);
  inst.allowed = Grid<std::uint8_t>(inst.trade_cost.rows(), inst.trade_cost.cols(), 0);
  for (std::size_t i = 0; i < inst.trade_cost.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) inst.allowed(i, j) = inst.trade_cost(i, j) ? 1 : 0;
  }

  LocalCosts local = calibrate_local_costs(inst.demand, config.theta, config.money_scale);
  inst.congestion = local.congestion;
  inst.local_cost = std::move(local.local_cost);
  require_valid(inst);
  return draw;
}

ReplicationResult run_replication(const Calibration& cal, const ExperimentConfig& config,
                                  std::size_t replication) {
  ReplicationResult result;
  result.draw = draw_replication(cal, config, replication);
  const MarketInstance& inst = result.draw.instance;
  result.equilibrium = run_english_auction(inst);
  const VerificationReport report = verify_equilibrium(inst, result.equilibrium);
  if (!report.passed()) {
    std::string message = "replication " + std::to_string(replication) +
                          ": equilibrium failed verification";
    for (const auto& w : report.witnesses) message += "; " + w;
    throw RuntimeFailure(message);
  }
  for (std::size_t j = 0; j < inst.markets(); ++j) {
    result.markets.push_back(market_structure(j, result.equilibrium.flows, inst));
  }
  for (std::size_t i = 0; i < inst.suppliers(); ++i) {
    result.suppliers.push_back(supplier_structure(i, result.equilibrium.flows, inst));
  }
  return result;
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= count || failed.load()) return;
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), count);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ScenarioReport run_experiment(const Calibration& cal, const ExperimentConfig& config) {
  validate_config(config);
  const std::size_t B = config.replications;
  std::vector<std::optional<ReplicationResult>> slots(B);
  parallel_for(B, config.workers,
               [&](std::size_t b) { slots[b] = run_replication(cal, config, b); });

  ScenarioReport report;
  report.scenario = config.scenario;
  report.markets = cal.markets;
  report.suppliers = cal.suppliers;
  report.replications.reserve(B);
  for (auto& slot : slots) report.replications.push_back(std::move(*slot));

  const std::size_t n = cal.markets.size();
  const std::size_t m = cal.suppliers.size();
  const double scale = static_cast<double>(config.money_scale);
  std::vector<std::vector<double>> demand(n), conc(n), local(n), div(m), share(m);
  std::vector<CostDraw> costs;
  for (const auto& r : report.replications) {
    report.rejections += static_cast<std::size_t>(r.draw.rejections);
    for (std::size_t j = 0; j < n; ++j) {
      demand[j].push_back(r.draw.demand_mt[j]);
      conc[j].push_back(r.markets[j].concentration);
      local[j].push_back(r.markets[j].local_share);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (r.suppliers[i].diversification) div[i].push_back(*r.suppliers[i].diversification);
      share[i].push_back(r.suppliers[i].global_share);
    }
    const auto& t = r.draw.instance.trade_cost;
    CostDraw draw(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.rows(); ++i) {
      for (std::size_t j = 0; j < t.cols(); ++j) {
        if (t(i, j)) draw(i, j) = static_cast<double>(t(i, j)->value) / scale;
      }
    }
    costs.push_back(std::move(draw));
  }
  for (std::size_t j = 0; j < n; ++j) {
    report.demand.push_back(stats_of(demand[j]));
    report.concentration.push_back(stats_of(conc[j]));
    report.local_share.push_back(stats_of(local[j]));
  }
  for (std::size_t i = 0; i < m; ++i) {
    report.diversification.push_back(stats_of(div[i]));
    report.global_share.push_back(stats_of(share[i]));
  }
  report.trade_costs = entry_floor_summary(costs);
  return report;
}

ScenarioReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(calibrate_experiment(config), config);
}

void emit_tables(const ScenarioReport& report, const ExperimentConfig& config,
                 const std::filesystem::path& outdir) {
  if (report.replications.empty()) throw ValidationError("report has no replications");
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec || !std::filesystem::is_directory(outdir)) {
    throw RuntimeFailure("cannot create output directory " + outdir.string());
  }
  const std::string B = std::to_string(report.replications.size());
  const std::vector<std::string> provenance = {"scenario " + report.scenario,
                                               "replications " + B,
                                               "seed " + std::to_string(config.seed)};
  const auto mean = &SampleStats::mean;
  const auto sd = &SampleStats::sd;

  auto per_market = [&](const std::string& file, const std::vector<SampleStats>& stats) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < report.markets.size(); ++j) {
      rows.push_back({report.markets[j], cell(stats[j], mean), cell(stats[j], sd)});
    }
    write_csv(outdir / file, provenance, {"region", "mean", "sd"}, rows);
  };
  per_market("demand.csv", report.demand);
  per_market("concentration.csv", report.concentration);
  per_market("local_share.csv", report.local_share);

  std::vector<std::vector<std::string>> div_rows, share_rows;
  for (std::size_t i = 0; i < report.suppliers.size(); ++i) {
    const auto& d = report.diversification[i];
    div_rows.push_back(
        {report.suppliers[i], cell(d, mean), cell(d, sd), std::to_string(d.count)});
    share_rows.push_back({report.suppliers[i], cell(report.global_share[i], mean),
                          cell(report.global_share[i], sd)});
  }
  write_csv(outdir / "diversification.csv", provenance, {"supplier", "mean", "sd", "count"},
            div_rows);
  write_csv(outdir / "global_share.csv", provenance, {"supplier", "mean", "sd"}, share_rows);

  std::vector<std::string> cost_header{"supplier"};
  cost_header.insert(cost_header.end(), report.markets.begin(), report.markets.end());
  auto cost_table = [&](const std::string& file, double SampleStats::*field) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < report.suppliers.size(); ++i) {
      std::vector<std::string> row{report.suppliers[i]};
      for (std::size_t j = 0; j < report.markets.size(); ++j) {
        const auto& c = report.trade_costs.cells(i, j);
        row.push_back(c ? format_fixed((*c).*field) : std::string{});
      }
      rows.push_back(std::move(row));
    }
    write_csv(outdir / file, provenance, cost_header, rows);
  };
  cost_table("trade_cost_mean.csv", mean);
  cost_table("trade_cost_sd.csv", sd);

  std::vector<std::vector<std::string>> floor_rows;
  for (std::size_t j = 0; j < report.markets.size(); ++j) {
    const auto& f = report.trade_costs.floor[j];
    floor_rows.push_back({report.markets[j], f ? format_fixed(*f) : std::string{}});
  }
  write_csv(outdir / "entry_floor.csv", provenance, {"region", "mean_min_cost"}, floor_rows);

  // Per-replication log: inputs in integer units, markups and flows.
  std::vector<std::string> header{"replication", "rejections", "a"};
  for (const auto& r : report.markets) header.push_back("d:" + r);
  for (const auto& r : report.markets) header.push_back("c:" + r);
  for (const auto& s : report.suppliers) header.push_back("s:" + s);
  for (const auto& s : report.suppliers) header.push_back("p:" + s);
  for (const auto& s : report.suppliers) {
    for (const auto& r : report.markets) header.push_back("x:" + s + ":" + r);
  }
  std::vector<std::vector<std::string>> log;
  for (const auto& rep : report.replications) {
    const MarketInstance& inst = rep.draw.instance;
    std::vector<std::string> row{std::to_string(rep.draw.replication),
                                 std::to_string(rep.draw.rejections),
                                 std::to_string(inst.congestion.value)};
    for (auto d : inst.demand) row.push_back(std::to_string(d.value));
    for (auto c : inst.local_cost) row.push_back(std::to_string(c.value));
    for (auto s : inst.capacity) row.push_back(std::to_string(s.value));
    for (auto p : rep.equilibrium.markups) row.push_back(std::to_string(p.value));
    for (std::size_t i = 0; i < inst.suppliers(); ++i) {
      for (std::size_t j = 0; j < inst.markets(); ++j) {
        row.push_back(std::to_string(rep.equilibrium.flows.at(i, j)));
      }
    }
    log.push_back(std::move(row));
  }
  write_csv(outdir / "replications.csv", provenance, header, log);

  std::ofstream manifest(outdir / "manifest.txt", std::ios::binary | std::ios::trunc);
  if (!manifest) throw RuntimeFailure("cannot write manifest in " + outdir.string());
  manifest << "pipeline_version = " << kPipelineVersion << '\n';
  for (const auto& line : describe_config(config)) manifest << line << '\n';
  const std::pair<const char*, const std::filesystem::path*> inputs[] = {
      {"series", &config.series_path},        {"scenario_z", &config.scenario_path},
      {"supplier_sales", &config.sales_path}, {"flows", &config.flows_path},
      {"local_supply", &config.local_path}};
  for (const auto& [key, path] : inputs) {
    if (path->empty()) continue;
    manifest << "input." << key << " = " << path->filename().string() << " sha256:"
             << file_digest(*path) << '\n';
  }
  manifest << "replications_completed = " << B << '\n';
  manifest << "rejected_draws = " << report.rejections << '\n';
  if (!manifest) throw RuntimeFailure("failed writing manifest in " + outdir.string());
}

MarketInstance downscale_instance(const MarketInstance& inst, std::int64_t max_quantity,
                                  std::int64_t max_money) {
  if (max_quantity < 1 || max_money < 1) throw ValidationError("downscale limits must be >= 1");
  auto ceil_div = [](std::int64_t a, std::int64_t b) { return (a + b - 1) / b; };
  auto round_div = [](std::int64_t a, std::int64_t b) { return (2 * a + b) / (2 * b); };

  std::int64_t q = 1;
  for (auto s : inst.capacity) q = std::max(q, ceil_div(s.value, max_quantity));
  for (auto d : inst.demand) q = std::max(q, ceil_div(d.value, max_quantity));
  std::int64_t largest = inst.congestion.value;
  for (auto c : inst.local_cost) largest = std::max(largest, c.value);
  for (std::size_t i = 0; i < inst.suppliers(); ++i) {
    for (std::size_t j = 0; j < inst.markets(); ++j) {
      if (inst.trade_cost(i, j)) largest = std::max(largest, inst.trade_cost(i, j)->value);
    }
  }
  const std::int64_t r = std::max<std::int64_t>(1, ceil_div(largest, max_money));

  MarketInstance out = inst;
  for (auto& s : out.capacity) s = Quantity{ceil_div(s.value, q)};
  for (auto& d : out.demand) d = Quantity{ceil_div(d.value, q)};
  out.congestion = Money{round_div(inst.congestion.value, r)};
  for (auto& c : out.local_cost) c = Money{std::max<std::int64_t>(1, round_div(c.value, r))};
  for (std::size_t i = 0; i < out.suppliers(); ++i) {
    for (std::size_t j = 0; j < out.markets(); ++j) {
      if (auto& t = out.trade_cost(i, j)) t = Money{round_div(t->value, r)};
    }
  }
  require_valid(out);
  return out;
}

}  // namespace dapmap
