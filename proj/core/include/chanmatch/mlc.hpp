#pragma once

#include "chanmatch/constellation.hpp"
#include "chanmatch/ldpc.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <span>
#include <vector>

namespace chanmatch {

using ldpc::bit;

enum class EstimateStructure { scalar, full, per_ring };

const char* to_string(EstimateStructure s);
EstimateStructure parse_structure(const std::string& s);

/// Noise statistics in the normalized symbol domain (unit signal energy).
///
/// `variance` is the total complex variance E|n|^2 and is always populated.
/// For `full`, `covariance` holds the real 2x2 matrix {xx, xy, yy}; for
/// `per_ring`, `ring_variance` holds one complex variance per ring.
struct NoiseEstimate {
  EstimateStructure structure = EstimateStructure::scalar;
  double variance = 0.0;
  std::array<double, 3> covariance{};
  std::array<double, Constellation::n_rings> ring_variance{};
  std::size_t samples = 0;

  static NoiseEstimate scalar(double nu);
  static NoiseEstimate full(double xx, double xy, double yy);
  static NoiseEstimate per_ring(const std::array<double, Constellation::n_rings>& nu);

  // Throws config_error unless every variance is positive and the covariance
  // is symmetric positive definite.
  void validate() const;

  friend bool operator==(const NoiseEstimate&, const NoiseEstimate&) = default;
};

struct MlcFrame {
  std::vector<bit> ldpc_codeword; // level 0, n bits
  std::vector<bit> upper_bits;    // levels 1..3, symbol i owns [3i, 3i + 3)
  std::vector<cplx> symbols;
};

// Information bits per frame: k coded-level bits followed by 3n upper bits.
inline std::size_t mlc_info_length(const ldpc::LdpcCode& code) { return code.k() + 3 * code.n(); }

MlcFrame mlc_encode(std::span<const bit> info, const ldpc::LdpcCode& code, const Constellation& qam);

// Reassembles the k + 3n information bits from level-0 and upper decisions.
std::vector<bit> mlc_info_bits(std::span<const bit> codeword, std::span<const bit> upper, std::size_t k);

/// Exact level-0 LLRs:
///   log sum_{x: b0 = 0} exp(-q(y - x)) - log sum_{x: b0 = 1} exp(-q(y - x))
/// with q the Gaussian negative log-density implied by `est` (up to a
/// constant shared by all candidates).
std::vector<double> llr_level0(std::span<const cplx> y, const NoiseEstimate& est, const Constellation& qam);

/// Maximum-likelihood point within the level-0 coset fixed by level0_bits[i];
/// ties go to the lowest packed label value. Returns 3n upper-level bits.
std::vector<bit> decide_upper(std::span<const cplx> y, std::span<const bit> level0_bits,
                              const NoiseEstimate& est, const Constellation& qam);

std::vector<cplx> remap(std::span<const bit> level0_bits, std::span<const bit> upper_bits,
                        const Constellation& qam);

} // namespace chanmatch
