#include "dapmap/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dapmap/csv.hpp"
#include "dapmap/error.hpp"

namespace dapmap {
namespace {

const std::string& region_of(const RegionMap& regions, const std::string& country) {
  const auto it = regions.find(country);
  if (it == regions.end()) throw ValidationError("country '" + country + "' has no region");
  return it->second;
}

std::string context(const CsvTable& table, std::size_t row) {
  return table.source + " row " + std::to_string(row + 1);
}

}  // namespace

ProductKind parse_product_kind(std::string_view text) {
  if (text == "DAP") return ProductKind::Dap;
  if (text == "MAP") return ProductKind::Map;
  if (text == "MAP_CN") return ProductKind::MapChina;
  if (text == "DAPMAP_MIX") return ProductKind::DapMapMix;
  throw ValidationError("unknown product kind '" + std::string(text) + "'");
}

std::string_view to_string(ProductKind kind) {
  switch (kind) {
    case ProductKind::Dap: return "DAP";
    case ProductKind::Map: return "MAP";
    case ProductKind::MapChina: return "MAP_CN";
    case ProductKind::DapMapMix: return "DAPMAP_MIX";
  }
  return "?";
}

int p2o5_percent(ProductKind kind) {
  switch (kind) {
    case ProductKind::Dap: return 46;
    case ProductKind::Map: return 52;
    case ProductKind::MapChina: return 44;
    case ProductKind::DapMapMix: return 49;
  }
  throw ValidationError("unknown product kind");
}

double convert_to_p2o5(double mass, ProductKind kind) {
  if (mass < 0.0) throw ValidationError("product mass must be >= 0");
  return mass * p2o5_percent(kind) / 100.0;
}

TradeFlowRecord to_p2o5(TradeFlowRecord record) {
  if (record.converted) throw ValidationError("trade flow record already converted to P2O5");
  record.mass = convert_to_p2o5(record.mass, record.kind);
  record.converted = true;
  return record;
}

CompiledFlows compile_trade_flows(const std::vector<RawTradeRecord>& raw,
                                  const ResidenceMap& residence, const RegionMap& regions,
                                  const std::vector<DomesticSupplyRecord>& domestic) {
  constexpr double kTonnesPerMt = 1e6;
  CompiledFlows out;
  std::set<std::tuple<std::string, std::string, int, ProductKind>> seen;
  std::vector<TradeFlowRecord> attributed;

  for (const auto& rec : raw) {
    if (!seen.emplace(rec.importer, rec.partner, rec.year, rec.kind).second) {
      throw ValidationError("duplicate trade row: " + rec.importer + " <- " + rec.partner + " " +
                            std::to_string(rec.year) + " " + std::string(to_string(rec.kind)));
    }
    const std::string& region = region_of(regions, rec.importer);
    const auto supplier = residence.find(rec.partner);
    if (supplier == residence.end()) {
      ++out.ignored_records;
      continue;
    }
    attributed.push_back({rec.year, supplier->second, region, rec.kind, rec.mass, false});
  }
  for (const auto& rec : domestic) {
    attributed.push_back(
        {rec.year, rec.supplier, region_of(regions, rec.country), rec.kind, rec.mass, false});
  }
  for (const auto& rec : attributed) {
    const TradeFlowRecord converted = to_p2o5(rec);
    out.flows[{converted.supplier, converted.region, converted.year}] +=
        converted.mass / kTonnesPerMt;
  }
  return out;
}

LocalSupply harmonize_local_supply(const FlowTable& flows,
                                   const std::map<RegionYear, double>& consumption) {
  std::map<RegionYear, double> imports;
  for (const auto& [key, mass] : flows) {
    const auto& [supplier, region, year] = key;
    RegionYear cell{region, year};
    if (!consumption.contains(cell)) {
      throw ValidationError("no apparent consumption for " + region + " " + std::to_string(year));
    }
    imports[cell] += mass;
  }
  LocalSupply out;
  for (const auto& [cell, total] : consumption) {
    const auto it = imports.find(cell);
    const double imported = it == imports.end() ? 0.0 : it->second;
    const double local = total - imported;
    if (local < 0.0) {
      out.residuals.push_back({cell.first, cell.second, -local});
      out.local[cell] = 0.0;
    } else {
      out.local[cell] = local;
    }
  }
  return out;
}

std::vector<ApplicationRate> derive_application_rates(const std::vector<CropUse>& use,
                                                      const std::vector<CropProduction>& production,
                                                      const RegionMap& regions,
                                                      const std::set<std::string>& eu_members) {
  constexpr double kKgPerTonne = 1000.0;
  using Cell = std::pair<std::string, std::string>;  // country, crop
  std::map<Cell, double> produced;
  for (const auto& row : production) produced[{row.country, row.crop}] += row.production;

  std::set<std::string> assessed;
  for (const auto& row : use) {
    if (row.entity != kEuEntity && row.entity != kRestOfWorldEntity) assessed.insert(row.entity);
  }

  std::map<Cell, ApplicationRate> rates;
  auto production_of = [&](const std::string& country, const std::string& crop) {
    const auto it = produced.find({country, crop});
    return it == produced.end() ? 0.0 : it->second;
  };

  for (const auto& row : use) {
    if (row.entity == kEuEntity || row.entity == kRestOfWorldEntity) continue;
    const double p = production_of(row.entity, row.crop);
    if (p <= 0.0) {
      throw ValidationError("no production of " + row.crop + " in " + row.entity +
                            " to compute an application rate");
    }
    rates[{row.entity, row.crop}] = {row.entity, row.crop, row.use / p * kKgPerTonne, false};
  }

  for (const auto& row : use) {
    if (row.entity == kEuEntity) {
      double total = 0.0;
      for (const auto& member : eu_members) {
        if (!assessed.contains(member)) total += production_of(member, row.crop);
      }
      if (total <= 0.0) {
        if (row.use > 0.0) throw ValidationError("EU use of " + row.crop + " without production");
        continue;
      }
      for (const auto& member : eu_members) {
        const double p = production_of(member, row.crop);
        if (assessed.contains(member) || p <= 0.0) continue;
        const double share = row.use * p / total;
        rates[{member, row.crop}] = {member, row.crop, share / p * kKgPerTonne, false};
      }
    } else if (row.entity == kRestOfWorldEntity) {
      std::map<std::string, double> by_region;
      std::map<std::string, std::vector<std::string>> members;
      double total = 0.0;
      for (const auto& [cell, p] : produced) {
        const auto& [country, crop] = cell;
        if (crop != row.crop || p <= 0.0) continue;
        if (assessed.contains(country) || eu_members.contains(country)) continue;
        const std::string& region = region_of(regions, country);
        by_region[region] += p;
        members[region].push_back(country);
        total += p;
      }
      if (total <= 0.0) {
        if (row.use > 0.0) {
          throw ValidationError("rest-of-world use of " + row.crop +
                                " but zero production in every region");
        }
        continue;
      }
      for (const auto& [region, p_region] : by_region) {
        const double regional_use = row.use * p_region / total;
        for (const auto& country : members[region]) {
          rates[{country, row.crop}] = {country, row.crop, regional_use / p_region * kKgPerTonne,
                                        false};
        }
      }
    }
  }

  std::map<std::pair<std::string, std::string>, double> regional_minimum;  // region, crop
  for (const auto& [cell, rate] : rates) {
    const std::string& region = region_of(regions, cell.first);
    auto [it, fresh] = regional_minimum.try_emplace({region, cell.second}, rate.rate);
    if (!fresh) it->second = std::min(it->second, rate.rate);
  }
  for (const auto& [cell, p] : produced) {
    if (p <= 0.0 || rates.contains(cell)) continue;
    const auto it = regional_minimum.find({region_of(regions, cell.first), cell.second});
    if (it == regional_minimum.end()) continue;
    rates[cell] = {cell.first, cell.second, it->second, true};
  }

  std::vector<ApplicationRate> out;
  out.reserve(rates.size());
  for (auto& [cell, rate] : rates) out.push_back(rate);
  return out;
}

std::map<std::string, double> scenario_fertilizer_use(const std::vector<ApplicationRate>& rates,
                                                      const std::vector<CropProduction>& scenario,
                                                      const RegionMap& regions) {
  constexpr double kKgPerMt = 1e9;
  constexpr double kTonnesPerKt = 1e3;
  std::map<std::pair<std::string, std::string>, double> lookup;
  for (const auto& r : rates) lookup[{r.country, r.crop}] = r.rate;

  std::map<std::string, double> totals;
  for (const auto& row : scenario) {
    if (row.production <= 0.0) continue;
    const auto it = lookup.find({row.country, row.crop});
    if (it == lookup.end()) {
      throw ValidationError("no application rate for " + row.country + " / " + row.crop);
    }
    totals[region_of(regions, row.country)] += it->second * row.production * kTonnesPerKt / kKgPerMt;
  }
  return totals;
}

WorldTotals aggregate_world(const std::vector<RegionScenarioRow>& rows) {
  WorldTotals world;
  for (const auto& row : rows) {
    world.observed += row.observed;
    world.bau += row.bau;
    world.sss += row.sss;
  }
  if (world.observed <= 0.0) throw ValidationError("observed world total must be positive");
  world.bau_growth_percent = (world.bau / world.observed - 1.0) * 100.0;
  world.sss_growth_percent = (world.sss / world.observed - 1.0) * 100.0;
  return world;
}

std::vector<RawTradeRecord> load_trade_records(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto year = t.column("year"), importer = t.column("importer"),
             partner = t.column("partner"), kind = t.column("kind"), mass = t.column("mass_t");
  std::vector<RawTradeRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    RawTradeRecord rec{parse_int(row[year], context(t, r)), row[importer], row[partner],
                       parse_product_kind(row[kind]), parse_number(row[mass], context(t, r))};
    if (rec.mass < 0.0) throw ValidationError(context(t, r) + ": negative mass");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<DomesticSupplyRecord> load_domestic_supply(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto year = t.column("year"), supplier = t.column("supplier"),
             country = t.column("country"), kind = t.column("kind"), mass = t.column("mass_t");
  std::vector<DomesticSupplyRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out.push_back({parse_int(row[year], context(t, r)), row[supplier], row[country],
                   parse_product_kind(row[kind]), parse_number(row[mass], context(t, r))});
  }
  return out;
}

RegionMap load_region_map(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto country = t.column("country"), region = t.column("region");
  RegionMap out;
  for (const auto& row : t.rows) {
    if (!out.emplace(row[country], row[region]).second) {
      throw ValidationError(t.source + ": country '" + row[country] + "' mapped twice");
    }
  }
  return out;
}

ResidenceMap load_residence_map(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto country = t.column("country"), supplier = t.column("supplier");
  ResidenceMap out;
  for (const auto& row : t.rows) {
    if (!out.emplace(row[country], row[supplier]).second) {
      throw ValidationError(t.source + ": residence country '" + row[country] + "' listed twice");
    }
  }
  return out;
}

std::map<RegionYear, double> load_consumption(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto region = t.column("region"), year = t.column("year"), value = t.column("p2o5_mt");
  std::map<RegionYear, double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out[{row[region], parse_int(row[year], context(t, r))}] = parse_number(row[value], context(t, r));
  }
  return out;
}

std::vector<CropUse> load_crop_use(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto entity = t.column("entity"), crop = t.column("crop"), use = t.column("use_kt");
  std::vector<CropUse> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out.push_back({row[entity], row[crop], parse_number(row[use], context(t, r))});
  }
  return out;
}

std::vector<CropProduction> load_crop_production(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto country = t.column("country"), crop = t.column("crop"),
             production = t.column("production_kt");
  std::vector<CropProduction> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out.push_back({row[country], row[crop], parse_number(row[production], context(t, r))});
  }
  return out;
}

std::set<std::string> load_name_list(const std::filesystem::path& path, std::string_view column) {
  const CsvTable t = read_csv(path);
  const auto col = t.column(column);
  std::set<std::string> out;
  for (const auto& row : t.rows) out.insert(row[col]);
  return out;
}

std::vector<RegionScenarioRow> load_region_scenario_rows(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto region = t.column("region"), observed = t.column("observed"), bau = t.column("bau"),
             sss = t.column("sss");
  std::vector<RegionScenarioRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out.push_back({row[region], parse_number(row[observed], context(t, r)),
                   parse_number(row[bau], context(t, r)), parse_number(row[sss], context(t, r))});
  }
  return out;
}

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig config;
  const std::pair<const char*, std::filesystem::path*> keys[] = {
      {"trade", &config.trade},
      {"domestic", &config.domestic},
      {"regions", &config.regions},
      {"residence", &config.residence},
      {"consumption", &config.consumption},
      {"crop_use", &config.crop_use},
      {"crop_production", &config.crop_production},
      {"eu_members", &config.eu_members},
      {"scenario_production", &config.scenario_production},
      {"region_table", &config.region_table},
      {"output_dir", &config.output_dir}};
  for (const auto& kv : parse_key_values(text)) {
    const auto it = std::find_if(std::begin(keys), std::end(keys),
                                 [&](const auto& k) { return kv.key == k.first; });
    if (it == std::end(keys)) throw ValidationError("unknown pipeline key '" + kv.key + "'");
    const std::filesystem::path p(kv.value);
    *it->second = p.is_absolute() ? p : base_dir / p;
  }
  return config;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_pipeline_config(buffer.str(), path.parent_path());
}

std::vector<std::string> run_pipeline(const PipelineConfig& config,
                                      const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec || !std::filesystem::is_directory(outdir)) {
    throw RuntimeFailure("cannot create output directory " + outdir.string());
  }
  std::vector<std::string> provenance{"pipeline_version " + std::string(kPipelineVersion)};
  const std::pair<const char*, const std::filesystem::path*> inputs[] = {
      {"trade", &config.trade},
      {"domestic", &config.domestic},
      {"regions", &config.regions},
      {"residence", &config.residence},
      {"consumption", &config.consumption},
      {"crop_use", &config.crop_use},
      {"crop_production", &config.crop_production},
      {"eu_members", &config.eu_members},
      {"scenario_production", &config.scenario_production},
      {"region_table", &config.region_table}};
  for (const auto& [key, path] : inputs) {
    if (path->empty()) continue;
    provenance.push_back(std::string("input ") + key + " " + path->filename().string() +
                         " sha256:" + file_digest(*path));
  }
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
    write_csv(outdir / name, provenance, header, rows);
    written.push_back(name);
  };

  std::optional<RegionMap> regions;
  if (!config.regions.empty()) regions = load_region_map(config.regions);
  auto need_regions = [&]() -> const RegionMap& {
    if (!regions) throw ValidationError("pipeline stage needs the 'regions' table");
    return *regions;
  };

  if (!config.trade.empty()) {
    if (config.residence.empty()) throw ValidationError("trade stage needs the 'residence' table");
    const auto domestic = config.domestic.empty() ? std::vector<DomesticSupplyRecord>{}
                                                  : load_domestic_supply(config.domestic);
    const CompiledFlows compiled = compile_trade_flows(
        load_trade_records(config.trade), load_residence_map(config.residence), need_regions(),
        domestic);
    std::vector<std::vector<std::string>> rows;
    for (const auto& [key, mt] : compiled.flows) {
      const auto& [supplier, region, year] = key;
      rows.push_back({supplier, region, std::to_string(year), format_fixed(mt)});
    }
    emit("flows.csv", {"supplier", "region", "year", "flow_mt"}, rows);

    if (!config.consumption.empty()) {
      const LocalSupply local =
          harmonize_local_supply(compiled.flows, load_consumption(config.consumption));
      rows.clear();
      for (const auto& [cell, mt] : local.local) {
        rows.push_back({cell.first, std::to_string(cell.second), format_fixed(mt)});
      }
      emit("local_supply.csv", {"region", "year", "local_mt"}, rows);
      rows.clear();
      for (const auto& r : local.residuals) {
        rows.push_back({r.region, std::to_string(r.year), format_fixed(r.excess)});
      }
      emit("harmonization_residuals.csv", {"region", "year", "excess_mt"}, rows);
    }
  }

  if (!config.crop_use.empty()) {
    if (config.crop_production.empty()) {
      throw ValidationError("application rate stage needs the 'crop_production' table");
    }
    const auto eu = config.eu_members.empty() ? std::set<std::string>{}
                                              : load_name_list(config.eu_members, "country");
    const auto rates = derive_application_rates(load_crop_use(config.crop_use),
                                                load_crop_production(config.crop_production),
                                                need_regions(), eu);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rates) {
      rows.push_back({r.country, r.crop, format_fixed(r.rate), r.imputed ? "1" : "0"});
    }
    emit("application_rates.csv", {"country", "crop", "rate_kg_per_t", "imputed"}, rows);

    if (!config.scenario_production.empty()) {
      const auto use = scenario_fertilizer_use(
          rates, load_crop_production(config.scenario_production), need_regions());
      rows.clear();
      for (const auto& [region, mt] : use) rows.push_back({region, format_fixed(mt)});
      emit("scenario_use.csv", {"region", "z"}, rows);
    }
  }

  if (!config.region_table.empty()) {
    const WorldTotals w = aggregate_world(load_region_scenario_rows(config.region_table));
    emit("world_totals.csv",
         {"observed", "bau", "sss", "bau_growth_percent", "sss_growth_percent"},
         {{format_fixed(w.observed), format_fixed(w.bau), format_fixed(w.sss),
           format_fixed(w.bau_growth_percent), format_fixed(w.sss_growth_percent)}});
  }
  if (written.empty()) throw ValidationError("pipeline config enables no stage");
  return written;
}

}  // namespace dapmap
