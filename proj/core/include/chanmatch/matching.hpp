#pragma once

#include "chanmatch/constellation.hpp"
#include "chanmatch/ldpc.hpp"
#include "chanmatch/mlc.hpp"
#include "chanmatch/surrogate_channel.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chanmatch {

enum class Strategy { fixed, genie, matched };

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

inline constexpr double default_nu_min = 1e-6;

struct DecoderConfig {
  Strategy strategy = Strategy::fixed;
  int r1 = 3; // BP iterations per pass
  int r2 = 3; // re-estimation passes (matched only)
  NoiseEstimate nominal;
  EstimateStructure estimate_structure = EstimateStructure::scalar;
  double nu_min = default_nu_min;

  // Total BP budget given to Fixed and Genie: r1 (r2 + 1).
  int fair_budget() const { return r1 * (r2 + 1); }
  void validate() const;
};

struct PassDiagnostics {
  NoiseEstimate estimate; // estimate used to form this pass's LLRs
  int bp_iterations = 0;
  bool converged = false;
  std::size_t syndrome_weight = 0;
  bool ring_fallback = false; // estimate had a ring fall back to the scalar value
};

struct DecodeResult {
  std::vector<bit> info_bits; // k + 3n
  std::vector<bit> codeword;  // level-0 decisions
  std::vector<bit> upper_bits;
  bool converged = false;
  int passes = 0;        // BP runs performed, <= r2 + 1
  int bp_iterations = 0; // summed over passes
  NoiseEstimate final_estimate;
  std::vector<PassDiagnostics> diagnostics;
};

struct MlEstimateResult {
  NoiseEstimate estimate;
  bool ring_fallback = false;
};

inline constexpr std::size_t min_estimation_samples = 100;
inline constexpr std::size_t min_ring_samples = 10;

/// Maximum-likelihood noise statistics from residuals y - x_hat, assumed zero
/// mean. Every variance is floored at nu_min. Under per_ring, a ring with
/// fewer than 10 samples takes the scalar estimate and sets ring_fallback.
MlEstimateResult ml_estimate(std::span<const cplx> y, std::span<const cplx> x_hat, EstimateStructure structure,
                             const Constellation& qam, double nu_min = default_nu_min);

// Estimate implied by the surrogate law at power p.
NoiseEstimate make_nominal(const NlinParams& params, double p, EstimateStructure structure);

// Relative change between two estimates of the same structure.
double relative_change(const NoiseEstimate& from, const NoiseEstimate& to);

/// Turbo decoder for one MLC block.
///
/// fixed / genie: one BP run of r1 (r2 + 1) iterations with LLRs from the
/// nominal / genie estimate, then multistage upper-level decisions.
///
/// matched: pass 0 is a BP run of r1 iterations from the nominal estimate.
/// Each of up to r2 further passes remaps the current decisions, re-estimates
/// the noise from the residuals, recomputes the LLRs and runs a fresh BP of
/// r1 iterations. Stops early once BP has converged and the new estimate
/// differs from the one in use by less than 0.1%.
class TurboDecoder {
public:
  TurboDecoder(const ldpc::LdpcCode& code, const Constellation& qam);

  DecodeResult decode(std::span<const cplx> y, const DecoderConfig& cfg,
                      const std::optional<NoiseEstimate>& genie = std::nullopt);

private:
  const ldpc::LdpcCode* code_;
  const Constellation* qam_;
  ldpc::BpDecoder bp_;
};

DecodeResult turbo_decode(std::span<const cplx> y, const DecoderConfig& cfg,
                          const std::optional<NoiseEstimate>& genie, const ldpc::LdpcCode& code,
                          const Constellation& qam);

} // namespace chanmatch
