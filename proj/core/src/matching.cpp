#include "chanmatch/matching.hpp"

#include "chanmatch/error.hpp"

#include <algorithm>
#include <cmath>

namespace chanmatch {

const char* to_string(Strategy s)
{
  switch (s) {
  case Strategy::fixed: return "fixed";
  case Strategy::genie: return "genie";
  case Strategy::matched: return "matched";
  }
  return "?";
}

Strategy parse_strategy(const std::string& s)
{
  if (s == "fixed")
    return Strategy::fixed;
  if (s == "genie")
    return Strategy::genie;
  if (s == "matched")
    return Strategy::matched;
  throw config_error("unknown strategy '" + s + "' (expected fixed, genie or matched)");
}

void DecoderConfig::validate() const
{
  if (r1 < 1)
    throw config_error("decoder: r1 must be at least 1");
  if (r2 < 0)
    throw config_error("decoder: r2 must be non-negative");
  if (!(nu_min > 0.0))
    throw config_error("decoder: nu_min must be positive");
  nominal.validate();
}

MlEstimateResult ml_estimate(std::span<const cplx> y, std::span<const cplx> x_hat, EstimateStructure structure,
                             const Constellation& qam, double nu_min)
{
  if (y.size() != x_hat.size())
    throw config_error("ml_estimate: sequences differ in length");
  if (y.size() < min_estimation_samples)
    throw config_error("ml_estimate: at least 100 samples required");

  const auto n = static_cast<double>(y.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  std::array<double, Constellation::n_rings> ring_sum{};
  std::array<std::size_t, Constellation::n_rings> ring_count{};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const cplx e = y[i] - x_hat[i];
    sxx += e.real() * e.real();
    sxy += e.real() * e.imag();
    syy += e.imag() * e.imag();
    if (structure == EstimateStructure::per_ring) {
      const auto r = qam.ring_of(x_hat[i]);
      ring_sum[r] += std::norm(e);
      ++ring_count[r];
    }
  }

  const double nu = std::max((sxx + syy) / n, nu_min);
  MlEstimateResult out;
  switch (structure) {
  case EstimateStructure::scalar: out.estimate = NoiseEstimate::scalar(nu); break;
  case EstimateStructure::full: {
    const double xx = std::max(sxx / n, nu_min);
    const double yy = std::max(syy / n, nu_min);
    double xy = sxy / n;
    // Keep the floored matrix positive definite.
    const double bound = 0.999 * std::sqrt(xx * yy);
    xy = std::clamp(xy, -bound, bound);
    out.estimate = NoiseEstimate::full(xx, xy, yy);
    break;
  }
  case EstimateStructure::per_ring: {
    std::array<double, Constellation::n_rings> rv{};
    for (std::size_t r = 0; r < Constellation::n_rings; ++r) {
      if (ring_count[r] < min_ring_samples) {
        rv[r] = nu;
        out.ring_fallback = true;
      } else {
        rv[r] = std::max(ring_sum[r] / static_cast<double>(ring_count[r]), nu_min);
      }
    }
    out.estimate = NoiseEstimate::per_ring(rv);
    break;
  }
  }
  out.estimate.samples = y.size();
  return out;
}

NoiseEstimate make_nominal(const NlinParams& params, double p, EstimateStructure structure)
{
  const double nu = noise_variance(params, p);
  switch (structure) {
  case EstimateStructure::scalar: return NoiseEstimate::scalar(nu);
  case EstimateStructure::full: return NoiseEstimate::full(nu / 2.0, 0.0, nu / 2.0);
  case EstimateStructure::per_ring: {
    std::array<double, Constellation::n_rings> rv{};
    for (std::size_t r = 0; r < Constellation::n_rings; ++r)
      rv[r] = symbol_noise_variance(params, p, Constellation::ring_energy[r]);
    return NoiseEstimate::per_ring(rv);
  }
  }
  return NoiseEstimate::scalar(nu);
}

double relative_change(const NoiseEstimate& from, const NoiseEstimate& to)
{
  auto rel = [](double a, double b) { return std::abs(b - a) / std::abs(a); };
  switch (to.structure) {
  case EstimateStructure::scalar: return rel(from.variance, to.variance);
  case EstimateStructure::full: {
    const double scale = from.covariance[0] + from.covariance[2];
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      worst = std::max(worst, std::abs(to.covariance[i] - from.covariance[i]) / scale);
    return worst;
  }
  case EstimateStructure::per_ring: {
    double worst = 0.0;
    for (std::size_t r = 0; r < Constellation::n_rings; ++r)
      worst = std::max(worst, rel(from.ring_variance[r], to.ring_variance[r]));
    return worst;
  }
  }
  return 0.0;
}

TurboDecoder::TurboDecoder(const ldpc::LdpcCode& code, const Constellation& qam)
    : code_(&code), qam_(&qam), bp_(code)
{
}

DecodeResult TurboDecoder::decode(std::span<const cplx> y, const DecoderConfig& cfg,
                                  const std::optional<NoiseEstimate>& genie)
{
  cfg.validate();
  if (y.size() != code_->n())
    throw config_error("turbo_decode: block length does not match the code");
  if (cfg.strategy == Strategy::genie) {
    if (!genie)
      throw config_error("turbo_decode: genie strategy requires the true noise estimate");
    genie->validate();
  }

  DecodeResult res;
  auto run_pass = [&](const NoiseEstimate& est, int iters, bool fallback) {
    const auto llr = llr_level0(y, est, *qam_);
    auto bp = bp_.decode(llr, iters);
    res.codeword = std::move(bp.bits);
    res.upper_bits = decide_upper(y, res.codeword, est, *qam_);
    res.converged = bp.converged;
    res.passes += 1;
    res.bp_iterations += bp.iterations;
    res.final_estimate = est;
    res.diagnostics.push_back({est, bp.iterations, bp.converged, bp.syndrome_weight, fallback});
  };

  switch (cfg.strategy) {
  case Strategy::fixed: run_pass(cfg.nominal, cfg.fair_budget(), false); break;
  case Strategy::genie: run_pass(*genie, cfg.fair_budget(), false); break;
  case Strategy::matched: {
    run_pass(cfg.nominal, cfg.r1, false);
    for (int t = 0; t < cfg.r2; ++t) {
      const auto x_hat = remap(res.codeword, res.upper_bits, *qam_);
      const auto next = ml_estimate(y, x_hat, cfg.estimate_structure, *qam_, cfg.nu_min);
      if (res.converged && next.estimate.structure == res.final_estimate.structure &&
          relative_change(res.final_estimate, next.estimate) < 1e-3)
        break;
      run_pass(next.estimate, cfg.r1, next.ring_fallback);
    }
    break;
  }
  }

  res.info_bits = mlc_info_bits(res.codeword, res.upper_bits, code_->k());
  return res;
}

DecodeResult turbo_decode(std::span<const cplx> y, const DecoderConfig& cfg,
                          const std::optional<NoiseEstimate>& genie, const ldpc::LdpcCode& code,
                          const Constellation& qam)
{
  TurboDecoder dec(code, qam);
  return dec.decode(y, cfg, genie);
}

} // namespace chanmatch
