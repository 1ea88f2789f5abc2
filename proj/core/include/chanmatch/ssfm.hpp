#pragma once

#include "chanmatch/constellation.hpp"
#include "chanmatch/rng.hpp"
#include "chanmatch/surrogate_channel.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace chanmatch::ssfm {

/// Single-polarization WDM link. Distances in km, times in s, powers in W.
struct FiberSystemParams {
  double alpha_db_per_km = 0.2;
  double gamma = 1.27;       // 1 / (W km)
  double beta2 = -21.67e-24; // s^2 / km
  double span_length_km = 50.0;
  std::size_t n_spans = 90;
  double planck = 6.626e-34; // J s
  double nu = 193.41e12;     // Hz
  double n_sp = 1.0;
  double channel_spacing = 50e9;
  double symbol_rate = 43.95e9;
  double rolloff = 0.0667;
  std::size_t n_channels = 5;
  std::size_t n_symbols = 3600;
  double guard_fraction = 0.0667;
  std::size_t samples_per_symbol = 16;

  // 90 spans, 5 channels, 3600 symbols.
  static FiberSystemParams full_scale();
  // 10 spans, 3 channels, 1024 symbols.
  static FiberSystemParams desk_scale();

  void validate() const;

  double alpha_per_km() const; // power attenuation rate
  double span_gain() const;    // e^{alpha L_A}
  double sample_rate() const { return symbol_rate * static_cast<double>(samples_per_symbol); }
};

/// Complex baseband field centred on the centre channel's carrier.
struct Waveform {
  std::vector<cplx> samples;
  double sample_rate = 0.0;
  double power_per_channel = 0.0; // launch power recorded by tx_waveform
};

// Coefficients of dA/dz = -alpha/2 A - i beta2/2 d2A/dt2 + i gamma |A|^2 A.
struct NlseCoefficients {
  double alpha = 0.0; // 1/km, power
  double beta2 = 0.0; // s^2/km
  double gamma = 0.0; // 1/(W km)
};

struct StepControl {
  double local_error = 1e-5; // relative local error target per step
  double initial_step_km = 1.0;
  double min_step_km = 1e-6;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

// (e^{alpha L_A} - 1) h nu n_sp, W/Hz.
double ase_psd(const FiberSystemParams& p);

// ASE variance accumulated over all spans after a unit-energy matched filter:
// n_spans * ase_psd * symbol_rate.
double ase_symbol_variance(const FiberSystemParams& p);

/// Symmetric split-step integration over `length_km` with local-error step
/// control: each step compares one full step with two half steps and keeps
/// the half-step result. Periodic boundary conditions.
/// Throws convergence_error if the step would shrink below min_step_km.
StepStats propagate(Waveform& w, const NlseCoefficients& c, double length_km, const StepControl& ctl = {});

StepStats propagate_span(Waveform& w, const FiberSystemParams& p, const StepControl& ctl = {});

// Gain e^{alpha L_A}; adds white circular noise of per-sample variance
// ase_psd * sample_rate when rng is non-null.
void amplify_edfa(Waveform& w, const FiberSystemParams& p, rng_stream* rng);

/// RRC-shaped channels on a 50 GHz grid (offsets rounded to the FFT bin
/// grid), channel c centred at (c - (n_channels - 1)/2) * spacing. Each row of
/// `symbols` is one channel; all rows share a length.
/// Throws config_error if the comb does not fit below Nyquist.
Waveform tx_waveform(const std::vector<std::vector<cplx>>& symbols, const FiberSystemParams& p, double power_w);

// Root-raised-cosine amplitude response, peak 1.
double rrc_response(double f, double symbol_rate, double rolloff);

struct RxOptions {
  bool backpropagate = true;
  StepControl step{};
};

/// Centre-channel receiver: brick-wall channel filter, single-channel digital
/// backpropagation (noise-free, sign-flipped coefficients, spans in reverse),
/// matched RRC filter, symbol-rate sampling, normalization by the launch
/// power, and one common phase rotation maximizing correlation with
/// `tx_reference`.
std::vector<cplx> rx_dsp(const Waveform& w, const FiberSystemParams& p, std::span<const cplx> tx_reference,
                         const RxOptions& opt = {});

struct LinkOptions {
  bool ase = true;
  StepControl step{};
  RxOptions rx{};
};

struct LinkRun {
  std::vector<cplx> tx; // centre-channel symbols
  std::vector<cplx> rx;
  StepStats forward;
};

// Uniform random 16-QAM on every channel, n_spans x (span + EDFA), rx_dsp.
LinkRun simulate_link(const FiberSystemParams& p, double power_w, std::uint64_t seed, const LinkOptions& opt = {});

// RMS error normalized to the reference power.
double evm(std::span<const cplx> tx, std::span<const cplx> rx);

struct SurrogateFit {
  NlinParams params;       // kappa clamped at 0
  double raw_kappa = 0.0;  // unconstrained least-squares value
  double residual = 0.0;   // RMS relative residual of nu_hat * p
  std::vector<double> powers;
  std::vector<double> nu_hat;
};

// Least squares of nu_hat(p) * p = sigma2_ase + kappa p^3 over >= 3 powers.
SurrogateFit fit_noise_law(std::span<const double> powers, std::span<const double> nu_hat);

// Residual variances from paired tx/rx symbol sets, one pair per power.
SurrogateFit fit_surrogate(const std::vector<std::vector<cplx>>& tx, const std::vector<std::vector<cplx>>& rx,
                           std::span<const double> powers);

/// Gaussian-auxiliary-channel lower bound on I(X;Y) from paired samples:
/// the auxiliary law is CN(x, nu_hat) with nu_hat the empirical residual
/// variance, and the input is uniform over the constellation.
MiEstimate mi_gaussian_auxiliary(std::span<const cplx> tx, std::span<const cplx> rx, const Constellation& qam);

} // namespace chanmatch::ssfm
