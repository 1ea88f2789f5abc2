// chanmatch: power sweeps, survivability, SSFM calibration and MI curves.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 I/O error.

#include "chanmatch/config.hpp"
#include "chanmatch/error.hpp"
#include "chanmatch/harness.hpp"
#include "chanmatch/sample_io.hpp"
#include "chanmatch/ssfm.hpp"
#include "chanmatch/surrogate_channel.hpp"
#include "chanmatch/units.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace chanmatch;
using json = nlohmann::json;

constexpr int exit_config = 2;
constexpr int exit_io = 3;

ExperimentConfig load_or_default(const std::string& path)
{
  return path.empty() ? ExperimentConfig{} : load_config(path);
}

struct SweepArgs {
  std::string config, strategy, out;
  std::optional<int> r1, r2;
  std::optional<std::size_t> blocks, workers;
  std::optional<std::uint64_t> seed;
};

int cmd_sweep(const SweepArgs& a)
{
  auto cfg = load_or_default(a.config);
  if (!a.strategy.empty())
    cfg.strategy = a.strategy;
  if (a.r1)
    cfg.r1 = *a.r1;
  if (a.r2)
    cfg.r2 = *a.r2;
  if (a.blocks)
    cfg.blocks = *a.blocks;
  if (a.seed)
    cfg.seed = *a.seed;
  if (a.workers)
    cfg.workers = *a.workers;
  cfg.validate();

  const auto link = make_link(cfg);
  const auto dec = make_decoder_config(cfg, link.params);
  const auto grid = cfg.power_grid();
  std::cerr << "sweep: " << cfg.strategy << " r1=" << cfg.r1 << " r2=" << cfg.r2 << " n=" << link.code.n()
            << " points=" << grid.size() << " blocks=" << cfg.blocks << "\n";

  std::vector<BerRecord> records;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    records.push_back(run_point(link, dec, grid[i], cfg.blocks, cfg.seed + i, cfg.workers));
    const auto& r = records.back();
    std::cerr << "  " << r.power_dbm << " dBm  BER " << r.ber << "  block errors " << r.block_errors << "/"
              << r.blocks << "  level-0 BER "
              << static_cast<double>(r.level0_errors) / static_cast<double>(r.level0_bits) << "  passes "
              << r.mean_passes << "\n";
  }
  // A single power has no interval; the report stays empty.
  SurvivabilityReport rep;
  rep.target_ber = cfg.target_ber;
  if (records.size() >= 2)
    rep = survivability(records, cfg.target_ber);
  emit(records, rep, to_json(cfg), a.out);
  std::cout << report_to_json(rep) << "\n";
  return 0;
}

int cmd_survivability(const std::string& in, double target)
{
  const auto records = read_csv(in);
  const auto rep = survivability(records, target);
  std::cout << report_to_json(rep) << "\n";
  return 0;
}

int cmd_calibrate(const std::string& config, const std::string& out, const std::string& dump)
{
  const auto cfg = load_or_default(config);
  const auto fiber = cfg.fiber();
  ssfm::LinkOptions opt;
  opt.ase = cfg.ssfm_ase;
  opt.step.local_error = cfg.ssfm_step_tolerance;
  opt.rx.step.local_error = cfg.ssfm_step_tolerance;

  std::vector<double> powers;
  std::vector<std::vector<cplx>> tx, rx;
  for (std::size_t i = 0; i < cfg.calibration_powers_dbm.size(); ++i) {
    const double dbm = cfg.calibration_powers_dbm[i];
    const auto t0 = std::chrono::steady_clock::now();
    auto run = ssfm::simulate_link(fiber, dbm_to_watt(dbm), cfg.seed + i, opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "  " << dbm << " dBm  EVM " << ssfm::evm(run.tx, run.rx) << "  steps " << run.forward.accepted
              << "  " << secs << " s\n";
    if (!dump.empty()) {
      std::filesystem::create_directories(dump);
      const std::string tag = std::to_string(i);
      write_complex_dump(std::filesystem::path(dump) / ("tx_" + tag + ".c128"), run.tx, fiber.symbol_rate);
      write_complex_dump(std::filesystem::path(dump) / ("rx_" + tag + ".c128"), run.rx, fiber.symbol_rate);
    }
    powers.push_back(dbm_to_watt(dbm));
    tx.push_back(std::move(run.tx));
    rx.push_back(std::move(run.rx));
  }
  const auto fit = ssfm::fit_surrogate(tx, rx, powers);

  json j;
  j["sigma2_ase_w"] = fit.params.sigma2_ase;
  j["kappa_per_w2"] = fit.params.kappa;
  j["raw_kappa_per_w2"] = fit.raw_kappa;
  j["fit_residual"] = fit.residual;
  j["powers_dbm"] = cfg.calibration_powers_dbm;
  j["nu_hat"] = fit.nu_hat;
  j["ase_symbol_variance_w"] = ssfm::ase_symbol_variance(fiber);
  if (fit.params.kappa > 0.0)
    j["p_opt_dbm"] = watt_to_dbm(optimal_power(fit.params));
  j["n_spans"] = fiber.n_spans;
  j["n_channels"] = fiber.n_channels;
  j["n_symbols"] = fiber.n_symbols;

  std::ofstream os(out);
  if (!os)
    throw io_error("cannot open " + out + " for writing");
  os << j.dump(2) << "\n";
  if (!os)
    throw io_error("write failed: " + out);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_mi_curve(const std::string& config, const std::string& out)
{
  const auto cfg = load_or_default(config);
  const auto grid = cfg.power_grid();
  std::vector<double> mi;
  std::vector<std::string> header;
  if (cfg.mi_source == "surrogate") {
    const auto law = cfg.noise_law();
    header = {"source surrogate, uniform 16-QAM, " + std::to_string(cfg.mi_samples) + " samples per point",
              "power_dbm mi_bits"};
    for (double dbm : grid) {
      // Common random numbers across the grid keep the curve smooth.
      auto rng = derive_stream(cfg.seed, 0x6d69ULL, 0);
      mi.push_back(mi_uniform(law, dbm_to_watt(dbm), cfg.mi_samples, rng).bits);
    }
  } else {
    const auto fiber = cfg.fiber();
    ssfm::LinkOptions opt;
    opt.ase = cfg.ssfm_ase;
    opt.step.local_error = cfg.ssfm_step_tolerance;
    opt.rx.step.local_error = cfg.ssfm_step_tolerance;
    const auto qam = build_16qam();
    header = {"source ssfm, Gaussian auxiliary channel lower bound, " + std::to_string(fiber.n_spans) + " spans, " +
                  std::to_string(fiber.n_channels) + " channels, " + std::to_string(fiber.n_symbols) + " symbols",
              "power_dbm mi_bits"};
    for (double dbm : grid) {
      const auto run = ssfm::simulate_link(fiber, dbm_to_watt(dbm), cfg.seed, opt);
      const auto est = ssfm::mi_gaussian_auxiliary(run.tx, run.rx, qam);
      std::cerr << "  " << dbm << " dBm  MI " << est.bits << " +- " << est.std_error << "\n";
      mi.push_back(est.bits);
    }
  }
  write_columns(out, grid, mi, header);
  const auto peak = std::max_element(mi.begin(), mi.end()) - mi.begin();
  std::cout << "peak " << grid[static_cast<std::size_t>(peak)] << " dBm, " << mi[static_cast<std::size_t>(peak)]
            << " bits\n";
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"chanmatch: noise-matched decoding experiments for WDM coded modulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(chanmatch::library_version()));

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo BER over the power grid");
  sweep_cmd->add_option("--config", sw.config, "JSON config file");
  sweep_cmd->add_option("--strategy", sw.strategy, "fixed | genie | matched")
      ->check(CLI::IsMember({"fixed", "genie", "matched"}));
  sweep_cmd->add_option("--r1", sw.r1, "BP iterations per pass");
  sweep_cmd->add_option("--r2", sw.r2, "turbo re-estimation passes");
  sweep_cmd->add_option("--blocks", sw.blocks, "blocks per power");
  sweep_cmd->add_option("--seed", sw.seed, "master seed");
  sweep_cmd->add_option("--workers", sw.workers, "worker threads (0 = all cores)");
  sweep_cmd->add_option("--out", sw.out, "output directory")->required();

  std::string cal_config, cal_out, cal_dump;
  auto* cal_cmd = app.add_subcommand("calibrate", "fit the surrogate noise law to split-step simulations");
  cal_cmd->add_option("--config", cal_config, "JSON config file");
  cal_cmd->add_option("--out", cal_out, "calibration JSON output")->required();
  cal_cmd->add_option("--dump", cal_dump, "directory for tx/rx symbol dumps");

  std::string mi_config, mi_out;
  auto* mi_cmd = app.add_subcommand("mi-curve", "mutual information versus launch power");
  mi_cmd->add_option("--config", mi_config, "JSON config file");
  mi_cmd->add_option("--out", mi_out, "two-column output file")->required();

  std::string surv_in;
  double surv_target = 1e-3;
  auto* surv_cmd = app.add_subcommand("survivability", "power interval meeting the BER target");
  surv_cmd->add_option("--in", surv_in, "BER CSV from sweep")->required();
  surv_cmd->add_option("--target", surv_target, "target BER");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  try {
    if (*sweep_cmd)
      return cmd_sweep(sw);
    if (*cal_cmd)
      return cmd_calibrate(cal_config, cal_out, cal_dump);
    if (*mi_cmd)
      return cmd_mi_curve(mi_config, mi_out);
    if (*surv_cmd)
      return cmd_survivability(surv_in, surv_target);
  } catch (const chanmatch::config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return exit_config;
  } catch (const chanmatch::io_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
