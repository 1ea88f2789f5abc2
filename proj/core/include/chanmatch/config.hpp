#pragma once

#include "chanmatch/matching.hpp"
#include "chanmatch/mlc.hpp"
#include "chanmatch/ssfm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chanmatch {

/// Experiment configuration. JSON keys carry their unit in the name and are
/// exactly the member names below; unknown keys are rejected.
struct ExperimentConfig {
  // Power grid and operating point.
  double p_min_dbm = -12.0;
  double p_max_dbm = -3.0;
  double p_step_db = 0.25;
  double p_opt_dbm = -6.8;

  // Surrogate noise law. Unset values are derived: sigma2_ase_w from the
  // full-scale link, kappa_per_w2 so the SNR peak sits at p_opt_dbm.
  std::optional<double> sigma2_ase_w;
  std::optional<double> kappa_per_w2;
  double epsilon = 0.0;

  // Inner code.
  std::size_t ldpc_n = 4000;
  double ldpc_rate = 0.63;
  std::uint64_t ldpc_seed = 1;
  std::optional<std::string> ldpc_alist;

  // Decoder and Monte Carlo.
  std::string strategy = "matched";
  int r1 = 3;
  int r2 = 3;
  std::size_t blocks = 200;
  std::uint64_t seed = 1;
  std::string estimate_structure = "scalar";
  double nu_min = default_nu_min;
  double target_ber = 1e-3;
  std::size_t workers = 0; // 0 = hardware concurrency

  // Split-step link (calibration and MI curve).
  std::size_t ssfm_n_spans = 10;
  std::size_t ssfm_n_channels = 3;
  std::size_t ssfm_n_symbols = 1024;
  std::size_t ssfm_samples_per_symbol = 16;
  double ssfm_step_tolerance = 1e-5;
  bool ssfm_ase = true;
  bool ssfm_full_scale = false; // 90 spans, 5 channels, 3600 symbols; hours
  std::vector<double> calibration_powers_dbm{-10.0, -6.0, -2.0, 2.0, 6.0};

  // MI curve.
  std::string mi_source = "surrogate"; // or "ssfm"
  std::size_t mi_samples = 100000;

  void validate() const;

  std::vector<double> power_grid() const;
  NlinParams noise_law() const;
  ssfm::FiberSystemParams fiber() const;
};

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Pretty-printed JSON with sorted keys; stable for identical configs.
std::string to_json(const ExperimentConfig& cfg, int indent = 2);

// Ascending grid from lo to hi inclusive, values rounded to 1e-9 dB.
std::vector<double> make_power_grid(double lo, double hi, double step);

} // namespace chanmatch
