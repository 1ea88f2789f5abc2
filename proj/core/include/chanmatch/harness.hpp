#pragma once

#include "chanmatch/config.hpp"
#include "chanmatch/constellation.hpp"
#include "chanmatch/ldpc.hpp"
#include "chanmatch/matching.hpp"
#include "chanmatch/surrogate_channel.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chanmatch {

const char* library_version();

struct BerRecord {
  double power_dbm = 0.0;
  Strategy strategy = Strategy::fixed;
  int r1 = 0;
  int r2 = 0;
  std::uint64_t blocks = 0;
  std::uint64_t bits = 0; // blocks * (k + 3n)
  std::uint64_t errors = 0;
  double ber = 0.0;
  double mean_passes = 0.0;
  double mean_bp_iterations = 0.0;
  std::uint64_t block_errors = 0;
  // Errors among the k LDPC information bits only (diagnostic, not in CSV).
  std::uint64_t level0_errors = 0;
  std::uint64_t level0_bits = 0;
  std::uint64_t seed = 0;
};

struct SurvivabilityReport {
  double target_ber = 1e-3;
  bool found = false;
  double p_lo_dbm = 0.0;
  double p_hi_dbm = 0.0;
  double width_db = 0.0;
  // An end without a crossing is pinned to the outermost grid point.
  bool lo_censored = false;
  bool hi_censored = false;
  // Some record had zero errors and was placed at 1 / (2 bits).
  bool floor_applied = false;
};

/// Everything a Monte Carlo point needs besides the decoder configuration.
struct Link {
  Constellation qam = build_16qam();
  ldpc::LdpcCode code;
  NlinParams params;
};

Link make_link(const ExperimentConfig& cfg);

// Decoder configuration from the experiment config; the nominal estimate is
// the surrogate law at p_opt_dbm.
DecoderConfig make_decoder_config(const ExperimentConfig& cfg, const NlinParams& params);

/// Monte Carlo BER at one launch power. Block b uses the stream
/// derive_stream(seed, 0, b) for its information bits and noise, so the
/// record does not depend on `workers` (0 = hardware concurrency).
BerRecord run_point(const Link& link, const DecoderConfig& cfg, double p_dbm, std::size_t n_blocks,
                    std::uint64_t seed, std::size_t workers = 0);

// One run_point per grid value; point i uses seed + i.
std::vector<BerRecord> sweep(const Link& link, const DecoderConfig& cfg, std::span<const double> grid_dbm,
                             std::size_t n_blocks, std::uint64_t seed, std::size_t workers = 0);

/// Widest contiguous run of records with BER <= target. Crossings are
/// interpolated linearly in (dBm, log10 BER); zero-error records count as
/// BER = 1 / (2 bits) for the interpolation only.
SurvivabilityReport survivability(std::span<const BerRecord> records, double target = 1e-3);

std::string records_to_csv(std::span<const BerRecord> records);
std::vector<BerRecord> parse_csv(const std::string& text);
std::vector<BerRecord> read_csv(const std::filesystem::path& path);

std::string report_to_json(const SurvivabilityReport& report, int indent = 2);

/// Writes `ber.csv`, `summary.json` (config echo, survivability, version)
/// and `ber.dat` (power, BER columns) into `dir`. Throws io_error.
void emit(std::span<const BerRecord> records, const SurvivabilityReport& report, const std::string& config_json,
          const std::filesystem::path& dir);

// Plain-text two-column plot data with optional '#' header lines.
void write_columns(const std::filesystem::path& path, std::span<const double> x, std::span<const double> y,
                   const std::vector<std::string>& header = {});

} // namespace chanmatch
