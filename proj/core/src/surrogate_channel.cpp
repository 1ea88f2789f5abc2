#include "chanmatch/surrogate_channel.hpp"

#include "chanmatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace chanmatch {

void NlinParams::validate() const
{
  if (!(sigma2_ase >= 0.0) || !(kappa >= 0.0) || !(epsilon >= 0.0))
    throw config_error("NlinParams: sigma2_ase, kappa and epsilon must be non-negative");
}

namespace {

void require_power(double p)
{
  if (!(p > 0.0) || !std::isfinite(p))
    throw config_error("invalid power: must be positive and finite");
}

} // namespace

double effective_snr(const NlinParams& params, double p)
{
  require_power(p);
  return p / (params.sigma2_ase + params.kappa * p * p * p);
}

double noise_variance(const NlinParams& params, double p)
{
  require_power(p);
  return (params.sigma2_ase + params.kappa * p * p * p) / p;
}

double symbol_noise_variance(const NlinParams& params, double p, double energy)
{
  return noise_variance(params, p) * (1.0 + params.epsilon * (energy - 1.0));
}

double calibrate_kappa(double sigma2_ase, double p_star)
{
  if (!(sigma2_ase > 0.0) || !(p_star > 0.0))
    throw config_error("calibrate_kappa: sigma2_ase and p_star must be positive");
  return sigma2_ase / (2.0 * p_star * p_star * p_star);
}

double optimal_power(const NlinParams& params)
{
  if (!(params.kappa > 0.0) || !(params.sigma2_ase > 0.0))
    throw config_error("optimal_power: requires sigma2_ase > 0 and kappa > 0");
  return std::cbrt(params.sigma2_ase / (2.0 * params.kappa));
}

std::vector<cplx> transmit(std::span<const cplx> x, const ChannelState& state,
                           const NlinParams& params, rng_stream& rng)
{
  params.validate();
  require_power(state.p_true);
  const double base = noise_variance(params, state.p_true);
  if (params.epsilon > 0.0) {
    // The inner ring is the smallest variance; it must stay positive.
    const double inner = 1.0 + params.epsilon * (Constellation::ring_energy[0] - 1.0);
    if (!(inner > 0.0))
      throw config_error("transmit: epsilon makes the inner-ring noise variance non-positive");
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<cplx> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double nu = base * (1.0 + params.epsilon * (std::norm(x[i]) - 1.0));
    const double s = std::sqrt(nu / 2.0);
    const double re = gauss(rng);
    const double im = gauss(rng);
    y[i] = x[i] + cplx(s * re, s * im);
  }
  return y;
}

MiEstimate mi_uniform(const NlinParams& params, double p, std::size_t n_samples, rng_stream& rng)
{
  params.validate();
  require_power(p);
  if (n_samples < 10000)
    throw config_error("mi_uniform: n_samples must be at least 1e4");

  static const Constellation qam = build_16qam();
  const auto& pts = qam.points();

  std::array<double, Constellation::size> nu{};
  std::array<double, Constellation::size> log_norm{};
  for (std::size_t v = 0; v < Constellation::size; ++v) {
    nu[v] = symbol_noise_variance(params, p, std::norm(pts[v]));
    if (!(nu[v] > 0.0))
      throw config_error("mi_uniform: noise variance must be positive");
    log_norm[v] = -std::log(std::numbers::pi * nu[v]);
  }

  std::uniform_int_distribution<int> pick(0, Constellation::size - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Welford running mean / variance of the per-sample information density.
  double mean = 0.0, m2 = 0.0;
  std::array<double, Constellation::size> metric{};
  for (std::size_t s = 0; s < n_samples; ++s) {
    const int v = pick(rng);
    const double sd = std::sqrt(nu[v] / 2.0);
    const double re = gauss(rng);
    const double im = gauss(rng);
    const cplx y = pts[v] + cplx(sd * re, sd * im);

    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < Constellation::size; ++u) {
      metric[u] = log_norm[u] - std::norm(y - pts[u]) / nu[u];
      peak = std::max(peak, metric[u]);
    }
    double acc = 0.0;
    for (double m : metric)
      acc += std::exp(m - peak);
    const double log_mix = peak + std::log(acc / Constellation::size);
    const double density = (metric[v] - log_mix) / std::numbers::ln2;

    const double delta = density - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (density - mean);
  }
  const double var = n_samples > 1 ? m2 / static_cast<double>(n_samples - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n_samples))};
}

} // namespace chanmatch
