// Command-line front end: pipeline, calibrate, simulate, verify.
// Exit codes: 0 success, 1 validation error, 2 runtime or verifier failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dapmap/auction.hpp"
#include "dapmap/brute_force.hpp"
#include "dapmap/error.hpp"
#include "dapmap/experiment.hpp"
#include "dapmap/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dapmap;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::size_t> workers;
  std::optional<fs::path> out;
};

ExperimentConfig experiment_config(const Overrides& o) {
  ExperimentConfig config = load_config(o.config);
  if (o.seed) config.seed = *o.seed;
  if (o.replications) config.replications = *o.replications;
  if (o.workers) config.workers = *o.workers;
  if (o.out) config.output_dir = *o.out;
  validate_config(config);
  return config;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cmd_pipeline(const Overrides& o) {
  PipelineConfig config = load_pipeline_config(o.config);
  const fs::path out = o.out.value_or(config.output_dir);
  for (const auto& name : run_pipeline(config, out)) std::cout << (out / name).string() << '\n';
  return 0;
}

int cmd_calibrate(const Overrides& o) {
  const ExperimentConfig config = experiment_config(o);
  emit_calibration(calibrate_experiment(config), config, config.output_dir);
  std::cout << "calibration written to " << config.output_dir.string() << '\n';
  return 0;
}

int cmd_simulate(const Overrides& o) {
  const ExperimentConfig config = experiment_config(o);
  const ScenarioReport report = run_experiment(config);
  emit_tables(report, config, config.output_dir);
  std::cout << "scenario " << report.scenario << ": " << report.replications.size()
            << " replications verified, " << report.rejections << " rejected draws; tables in "
            << config.output_dir.string() << '\n';
  return 0;
}

// Recomputes the run from its config and seed, compares the emitted files
// with the saved ones, and cross-checks every replication against the
// brute-force oracle on a down-scaled copy of its instance.
int cmd_verify(const Overrides& o, const std::optional<fs::path>& run_dir, std::int64_t max_quantity,
               std::int64_t max_money) {
  const ExperimentConfig config = experiment_config(o);
  const ScenarioReport report = run_experiment(config);
  int failures = 0;

  const fs::path saved = run_dir.value_or(config.output_dir);
  if (fs::is_directory(saved)) {
    const fs::path fresh = fs::temp_directory_path() /
                           ("dapmap-verify-" + std::to_string(std::random_device{}()));
    emit_tables(report, config, fresh);
    for (const auto& entry : fs::directory_iterator(fresh)) {
      const fs::path old = saved / entry.path().filename();
      const bool same = fs::exists(old) && read_file(old) == read_file(entry.path());
      if (!same) {
        ++failures;
        std::cout << "MISMATCH " << old.string() << '\n';
      }
    }
    fs::remove_all(fresh);
  } else {
    std::cout << "no saved run at " << saved.string() << "; skipping file comparison\n";
  }

  std::mutex guard;
  std::size_t checked = 0;
  parallel_for(report.replications.size(), config.workers, [&](std::size_t b) {
    const MarketInstance small =
        downscale_instance(report.replications[b].draw.instance, max_quantity, max_money);
    const Equilibrium auction = run_english_auction(small);
    const BruteForceResult oracle = brute_force_equilibrium(small, max_local_marginal(small));
    const bool ok = oracle.componentwise_minimal &&
                    auction.markups == oracle.chosen.markups &&
                    verify_equilibrium(small, auction).passed();
    std::lock_guard lock(guard);
    ++checked;
    if (!ok) {
      ++failures;
      std::cout << "ORACLE MISMATCH replication " << b << '\n';
    }
  });
  std::cout << checked << " down-scaled replications checked against the oracle, " << failures
            << " failures\n";
  return failures == 0 ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation of the DAP/MAP fertilizer market under crop production scenarios"};
  app.require_subcommand(1);

  Overrides o;
  std::optional<fs::path> run_dir;
  std::int64_t max_quantity = 8;
  std::int64_t max_money = 40;

  auto add_common = [&](CLI::App* sub, bool experiment) {
    sub->add_option("--config", o.config, "config file (key = value lines)")->required();
    sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    if (experiment) {
      sub->add_option("--seed", o.seed, "master seed override");
      sub->add_option("--replications", o.replications, "bootstrap replication count override");
      sub->add_option("--workers", o.workers, "worker threads (does not change results)");
    }
  };
  auto* pipeline = app.add_subcommand("pipeline", "compile trade flows, local supply and scenario use");
  add_common(pipeline, false);
  auto* calibrate = app.add_subcommand("calibrate", "fit the demand, capacity and trade-cost models");
  add_common(calibrate, true);
  auto* simulate = app.add_subcommand("simulate", "run the bootstrap experiment and emit tables");
  add_common(simulate, true);
  auto* verify = app.add_subcommand("verify", "re-check a saved run and cross-check the oracle");
  add_common(verify, true);
  verify->add_option("--run", run_dir, "saved run directory (default: output_dir)");
  verify->add_option("--max-quantity", max_quantity, "largest s_i, d_j after down-scaling");
  verify->add_option("--max-money", max_money, "largest cost after down-scaling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*pipeline) return cmd_pipeline(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*simulate) return cmd_simulate(o);
    return cmd_verify(o, run_dir, max_quantity, max_money);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
