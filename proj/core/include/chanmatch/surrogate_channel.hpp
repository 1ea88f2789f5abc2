#pragma once

#include "chanmatch/constellation.hpp"
#include "chanmatch/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace chanmatch {

/// Noise law of the conditionally Gaussian channel, in the matched-filter
/// symbol domain. At average launch power p the normalized noise variance of
/// a symbol x is
///
///   nu(x) = (sigma2_ase + kappa p^3) / p * (1 + epsilon (|x|^2 - 1)).
struct NlinParams {
  double sigma2_ase = 0.0; // W
  double kappa = 0.0;      // W^-2
  double epsilon = 0.0;

  // Throws config_error on negative entries. sigma2_ase = 0 is accepted as
  // the noiseless reference channel.
  void validate() const;
};

struct ChannelState {
  double p_true = 0.0; // W, constant within a block
  std::size_t block_length = 0;
};

// p / (sigma2_ase + kappa p^3).
double effective_snr(const NlinParams& params, double p);

// Mean normalized noise variance at power p, i.e. 1 / effective_snr.
double noise_variance(const NlinParams& params, double p);

// Variance seen by a symbol of squared magnitude `energy`.
double symbol_noise_variance(const NlinParams& params, double p, double energy);

// kappa placing the effective-SNR maximum at p_star: sigma2_ase / (2 p_star^3).
double calibrate_kappa(double sigma2_ase, double p_star);

// Power maximizing effective_snr, (sigma2_ase / (2 kappa))^(1/3).
double optimal_power(const NlinParams& params);

/// y_i = x_i + n_i with n_i ~ CN(0, nu(x_i)) at p = state.p_true.
std::vector<cplx> transmit(std::span<const cplx> x, const ChannelState& state,
                           const NlinParams& params, rng_stream& rng);

struct MiEstimate {
  double bits = 0.0;
  double std_error = 0.0;
};

// Monte Carlo I(X;Y) for uniform 16-QAM input over the conditionally Gaussian
// channel at power p. n_samples >= 10^4.
MiEstimate mi_uniform(const NlinParams& params, double p, std::size_t n_samples, rng_stream& rng);

} // namespace chanmatch
