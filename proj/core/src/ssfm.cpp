#include "chanmatch/ssfm.hpp"

#include "chanmatch/error.hpp"
#include "chanmatch/units.hpp"
#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace chanmatch::ssfm {

using detail::Fft;

FiberSystemParams FiberSystemParams::full_scale() { return {}; }

FiberSystemParams FiberSystemParams::desk_scale()
{
  FiberSystemParams p;
  p.n_spans = 10;
  p.n_channels = 3;
  p.n_symbols = 1024;
  return p;
}

void FiberSystemParams::validate() const
{
  auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!(alpha_db_per_km >= 0.0) || !(gamma >= 0.0) || !(beta2 <= 0.0) || !pos(span_length_km) || n_spans == 0 ||
      !pos(planck) || !pos(nu) || !(n_sp >= 0.0) || !pos(channel_spacing) || !pos(symbol_rate) ||
      !(rolloff > 0.0 && rolloff <= 1.0) || n_channels == 0 || n_symbols == 0 || !(guard_fraction >= 0.0) ||
      samples_per_symbol < 2)
    throw config_error("fiber parameters out of range");
  // 50 GHz / (1.0667 * 1.0667) = 43.94 GBd; allow the rounding in 43.95.
  if (symbol_rate * (1.0 + rolloff) * (1.0 + guard_fraction) > channel_spacing * (1.0 + 1e-3))
    throw config_error("symbol rate, roll-off and guard band do not fit the channel spacing");
}

double FiberSystemParams::alpha_per_km() const { return db_per_km_to_neper(alpha_db_per_km); }
double FiberSystemParams::span_gain() const { return std::exp(alpha_per_km() * span_length_km); }

double ase_psd(const FiberSystemParams& p) { return (p.span_gain() - 1.0) * p.planck * p.nu * p.n_sp; }

double ase_symbol_variance(const FiberSystemParams& p)
{
  return static_cast<double>(p.n_spans) * ase_psd(p) * p.symbol_rate;
}

namespace {

// Angular frequency of FFT bin k for n bins at sample rate fs.
double bin_omega(std::size_t k, std::size_t n, double fs)
{
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  const double f = (k < (n + 1) / 2 ? kk : kk - nn) * fs / nn;
  return 2.0 * std::numbers::pi * f;
}

double bin_freq(std::size_t k, std::size_t n, double fs) { return bin_omega(k, n, fs) / (2.0 * std::numbers::pi); }

double norm2(std::span<const cplx> v)
{
  double s = 0.0;
  for (const auto& x : v)
    s += std::norm(x);
  return s;
}

class SplitStep {
public:
  SplitStep(std::size_t n, double fs, const NlseCoefficients& c)
      : n_(n), c_(c), fft_(n), half_(n), quarter_(n), omega2_(n), coarse_(n), fine_(n)
  {
    for (std::size_t k = 0; k < n; ++k) {
      const double w = bin_omega(k, n, fs);
      omega2_[k] = w * w;
    }
  }

  // Linear operator exp((i beta2 w^2 / 2 - alpha / 2) h).
  void linear_factors(double h)
  {
    const double q = h / 4.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const double ph = 0.5 * c_.beta2 * omega2_[k] * q;
      quarter_[k] = std::exp(-0.5 * c_.alpha * q) * cplx(std::cos(ph), std::sin(ph));
      half_[k] = quarter_[k] * quarter_[k];
    }
  }

  // One symmetric step L(h/2) N(h) L(h/2) on a spectrum, in place.
  void step(std::vector<cplx>& spec, const std::vector<cplx>& lin, double h)
  {
    auto buf = fft_.buffer();
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < n_; ++k)
      buf[k] = spec[k] * lin[k];
    fft_.backward();
    const double g = c_.gamma * h;
    for (std::size_t i = 0; i < n_; ++i) {
      const cplx u = buf[i] * inv_n;
      const double ph = g * std::norm(u);
      buf[i] = u * cplx(std::cos(ph), std::sin(ph));
    }
    fft_.forward();
    for (std::size_t k = 0; k < n_; ++k)
      spec[k] = buf[k] * lin[k];
  }

  StepStats run(std::vector<cplx>& samples, double length, const StepControl& ctl)
  {
    StepStats stats;
    auto buf = fft_.buffer();
    std::copy(samples.begin(), samples.end(), buf.begin());
    fft_.forward();
    std::vector<cplx> spec(buf.begin(), buf.end());

    const double grow = std::cbrt(2.0);
    double z = 0.0;
    double h = std::min(ctl.initial_step_km, length);
    while (length - z > 1e-12 * length) {
      h = std::min(h, length - z);
      linear_factors(h);
      coarse_ = spec;
      step(coarse_, half_, h);
      fine_ = spec;
      step(fine_, quarter_, h / 2.0);
      step(fine_, quarter_, h / 2.0);

      const double ref = norm2(fine_);
      double diff = 0.0;
      for (std::size_t k = 0; k < n_; ++k)
        diff += std::norm(fine_[k] - coarse_[k]);
      const double err = ref > 0.0 ? std::sqrt(diff / ref) : 0.0;

      if (err > 2.0 * ctl.local_error) {
        ++stats.rejected;
        h /= 2.0;
        if (h < ctl.min_step_km)
          throw convergence_error("split-step: step size fell below " + std::to_string(ctl.min_step_km) + " km");
        continue;
      }
      spec.swap(fine_);
      z += h;
      ++stats.accepted;
      if (err > ctl.local_error)
        h /= grow;
      else if (err < 0.5 * ctl.local_error)
        h *= grow;
    }

    std::copy(spec.begin(), spec.end(), buf.begin());
    fft_.backward();
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i)
      samples[i] = buf[i] * inv_n;
    return stats;
  }

private:
  std::size_t n_;
  NlseCoefficients c_;
  Fft fft_;
  std::vector<cplx> half_, quarter_;
  std::vector<double> omega2_;
  std::vector<cplx> coarse_, fine_;
};

} // namespace

StepStats propagate(Waveform& w, const NlseCoefficients& c, double length_km, const StepControl& ctl)
{
  if (w.samples.empty() || !(w.sample_rate > 0.0))
    throw config_error("propagate: empty waveform or invalid sample rate");
  if (!(length_km >= 0.0))
    throw config_error("propagate: negative length");
  if (!(ctl.local_error > 0.0) || !(ctl.initial_step_km > 0.0) || !(ctl.min_step_km > 0.0))
    throw config_error("propagate: invalid step control");
  if (length_km == 0.0)
    return {};
  SplitStep solver(w.samples.size(), w.sample_rate, c);
  return solver.run(w.samples, length_km, ctl);
}

StepStats propagate_span(Waveform& w, const FiberSystemParams& p, const StepControl& ctl)
{
  return propagate(w, {p.alpha_per_km(), p.beta2, p.gamma}, p.span_length_km, ctl);
}

void amplify_edfa(Waveform& w, const FiberSystemParams& p, rng_stream* rng)
{
  const double g = std::sqrt(p.span_gain());
  for (auto& s : w.samples)
    s *= g;
  if (!rng)
    return;
  const double sd = std::sqrt(ase_psd(p) * w.sample_rate / 2.0);
  if (sd == 0.0)
    return;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& s : w.samples) {
    const double re = gauss(*rng);
    const double im = gauss(*rng);
    s += cplx(sd * re, sd * im);
  }
}

double rrc_response(double f, double symbol_rate, double rolloff)
{
  const double af = std::abs(f);
  const double f1 = (1.0 - rolloff) * symbol_rate / 2.0;
  const double f2 = (1.0 + rolloff) * symbol_rate / 2.0;
  if (af <= f1)
    return 1.0;
  if (af > f2)
    return 0.0;
  const double rc = 0.5 * (1.0 + std::cos(std::numbers::pi * (af - f1) / (rolloff * symbol_rate)));
  return std::sqrt(rc);
}

namespace {

long channel_offset_bins(std::size_t c, const FiberSystemParams& p, std::size_t n_samples, double fs)
{
  const double offset = (static_cast<double>(c) - 0.5 * static_cast<double>(p.n_channels - 1)) * p.channel_spacing;
  return std::lround(offset / (fs / static_cast<double>(n_samples)));
}

} // namespace

Waveform tx_waveform(const std::vector<std::vector<cplx>>& symbols, const FiberSystemParams& p, double power_w)
{
  p.validate();
  if (symbols.size() != p.n_channels)
    throw config_error("tx_waveform: expected one symbol row per channel");
  const std::size_t n_sym = symbols.front().size();
  if (n_sym == 0)
    throw config_error("tx_waveform: empty symbol block");
  for (const auto& row : symbols)
    if (row.size() != n_sym)
      throw config_error("tx_waveform: channels differ in length");
  if (!(power_w >= 0.0))
    throw config_error("tx_waveform: negative power");

  const std::size_t sps = p.samples_per_symbol;
  const std::size_t n = n_sym * sps;
  const double fs = p.sample_rate();
  const double df = fs / static_cast<double>(n);
  const double edge = (1.0 + p.rolloff) * p.symbol_rate / 2.0;
  const long max_offset = channel_offset_bins(p.n_channels - 1, p, n, fs);
  if (static_cast<double>(max_offset) * df + edge >= fs / 2.0)
    throw config_error("tx_waveform: sample rate too low for the channel comb (aliasing)");

  Fft sym_fft(n_sym);
  Fft out_fft(n);
  auto out = out_fft.buffer();
  std::fill(out.begin(), out.end(), cplx{});

  // Zero-stuffed symbols have a spectrum periodic in n_sym bins; the RRC
  // (peak sps) selects one period. This gives unit average power for
  // unit-energy symbols.
  const double amp = std::sqrt(power_w) * static_cast<double>(sps);
  const auto half_band = static_cast<long>(std::ceil(edge / df));
  for (std::size_t c = 0; c < p.n_channels; ++c) {
    auto sb = sym_fft.buffer();
    std::copy(symbols[c].begin(), symbols[c].end(), sb.begin());
    sym_fft.forward();
    const long off = channel_offset_bins(c, p, n, fs);
    for (long b = -half_band; b <= half_band; ++b) {
      const double h = rrc_response(static_cast<double>(b) * df, p.symbol_rate, p.rolloff);
      if (h == 0.0)
        continue;
      const auto src = static_cast<std::size_t>(((b % static_cast<long>(n_sym)) + static_cast<long>(n_sym)) %
                                                static_cast<long>(n_sym));
      const auto dst = static_cast<std::size_t>(((b + off) % static_cast<long>(n) + static_cast<long>(n)) %
                                                static_cast<long>(n));
      out[dst] += sb[src] * (amp * h);
    }
  }
  out_fft.backward();

  Waveform w;
  w.sample_rate = fs;
  w.power_per_channel = power_w;
  w.samples.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = out[i] * inv_n;
  return w;
}

std::vector<cplx> rx_dsp(const Waveform& w, const FiberSystemParams& p, std::span<const cplx> tx_reference,
                         const RxOptions& opt)
{
  p.validate();
  const std::size_t sps = p.samples_per_symbol;
  const std::size_t n = w.samples.size();
  if (n == 0 || n % sps != 0)
    throw config_error("rx_dsp: waveform length is not a whole number of symbols");
  const std::size_t n_sym = n / sps;
  if (!tx_reference.empty() && tx_reference.size() != n_sym)
    throw config_error("rx_dsp: reference length does not match the waveform");
  if (!(w.power_per_channel > 0.0))
    throw config_error("rx_dsp: waveform carries no launch power");

  Waveform centre = w;
  {
    Fft fft(n);
    auto buf = fft.buffer();
    std::copy(w.samples.begin(), w.samples.end(), buf.begin());
    fft.forward();
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(bin_freq(k, n, w.sample_rate)) > p.channel_spacing / 2.0)
        buf[k] = 0.0;
    fft.backward();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      centre.samples[i] = buf[i] * inv_n;
  }

  if (opt.backpropagate) {
    const NlseCoefficients inverse{-p.alpha_per_km(), -p.beta2, -p.gamma};
    const double inv_gain = 1.0 / std::sqrt(p.span_gain());
    for (std::size_t s = 0; s < p.n_spans; ++s) {
      for (auto& x : centre.samples)
        x *= inv_gain;
      propagate(centre, inverse, p.span_length_km, opt.step);
    }
  }

  // Matched filter; RRC^2 is Nyquist so symbol-spaced samples are ISI free.
  Fft fft(n);
  auto buf = fft.buffer();
  std::copy(centre.samples.begin(), centre.samples.end(), buf.begin());
  fft.forward();
  for (std::size_t k = 0; k < n; ++k)
    buf[k] *= rrc_response(bin_freq(k, n, w.sample_rate), p.symbol_rate, p.rolloff);
  fft.backward();

  const double scale = 1.0 / (static_cast<double>(n) * std::sqrt(w.power_per_channel));
  std::vector<cplx> y(n_sym);
  for (std::size_t k = 0; k < n_sym; ++k)
    y[k] = buf[k * sps] * scale;

  if (!tx_reference.empty()) {
    cplx corr{};
    for (std::size_t k = 0; k < n_sym; ++k)
      corr += y[k] * std::conj(tx_reference[k]);
    if (std::abs(corr) > 0.0) {
      const cplx rot = std::conj(corr) / std::abs(corr);
      for (auto& v : y)
        v *= rot;
    }
  }
  return y;
}

LinkRun simulate_link(const FiberSystemParams& p, double power_w, std::uint64_t seed, const LinkOptions& opt)
{
  p.validate();
  static const Constellation qam = build_16qam();
  std::vector<std::vector<cplx>> symbols(p.n_channels, std::vector<cplx>(p.n_symbols));
  std::uniform_int_distribution<int> pick(0, Constellation::size - 1);
  for (std::size_t c = 0; c < p.n_channels; ++c) {
    auto rng = derive_stream(seed, 0x747863ULL, c);
    for (auto& s : symbols[c])
      s = qam.points()[static_cast<std::size_t>(pick(rng))];
  }

  LinkRun run;
  run.tx = symbols[p.n_channels / 2];
  auto w = tx_waveform(symbols, p, power_w);
  auto noise = derive_stream(seed, 0x617365ULL, 0);
  for (std::size_t s = 0; s < p.n_spans; ++s) {
    const auto st = propagate_span(w, p, opt.step);
    run.forward.accepted += st.accepted;
    run.forward.rejected += st.rejected;
    amplify_edfa(w, p, opt.ase ? &noise : nullptr);
  }
  run.rx = rx_dsp(w, p, run.tx, opt.rx);
  return run;
}

double evm(std::span<const cplx> tx, std::span<const cplx> rx)
{
  if (tx.size() != rx.size() || tx.empty())
    throw config_error("evm: sequences differ in length or are empty");
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    err += std::norm(rx[i] - tx[i]);
    ref += std::norm(tx[i]);
  }
  return std::sqrt(err / ref);
}

SurrogateFit fit_noise_law(std::span<const double> powers, std::span<const double> nu_hat)
{
  if (powers.size() != nu_hat.size())
    throw estimation_error("fit: power and variance lists differ in length");
  if (powers.size() < 3)
    throw estimation_error("fit: at least 3 powers are required");

  // Columns scaled to O(1) before forming the normal equations.
  const double p_ref = *std::max_element(powers.begin(), powers.end());
  if (!(p_ref > 0.0))
    throw estimation_error("fit: powers must be positive");
  double s11 = 0.0, s12 = 0.0, s22 = 0.0, t1 = 0.0, t2 = 0.0, y_scale = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i)
    y_scale = std::max(y_scale, std::abs(nu_hat[i] * powers[i]));
  if (!(y_scale > 0.0))
    throw estimation_error("fit: all residual variances are zero");
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (!(powers[i] > 0.0))
      throw estimation_error("fit: powers must be positive");
    const double u = std::pow(powers[i] / p_ref, 3.0);
    const double y = nu_hat[i] * powers[i] / y_scale;
    s11 += 1.0;
    s12 += u;
    s22 += u * u;
    t1 += y;
    t2 += u * y;
  }
  const double det = s11 * s22 - s12 * s12;
  if (!(std::abs(det) > 1e-12 * s11 * s22))
    throw estimation_error("fit: singular system (powers too close together)");
  const double a = (s22 * t1 - s12 * t2) / det;
  const double b = (s11 * t2 - s12 * t1) / det;

  SurrogateFit fit;
  fit.powers.assign(powers.begin(), powers.end());
  fit.nu_hat.assign(nu_hat.begin(), nu_hat.end());
  fit.params.sigma2_ase = a * y_scale;
  fit.raw_kappa = b * y_scale / (p_ref * p_ref * p_ref);
  fit.params.kappa = std::max(fit.raw_kappa, 0.0);
  if (!(fit.params.sigma2_ase > 0.0))
    throw estimation_error("fit: non-positive ASE term");

  double rss = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    const double obs = nu_hat[i] * powers[i];
    const double model = fit.params.sigma2_ase + fit.params.kappa * std::pow(powers[i], 3.0);
    rss += std::pow((model - obs) / obs, 2.0);
  }
  fit.residual = std::sqrt(rss / static_cast<double>(powers.size()));
  return fit;
}

SurrogateFit fit_surrogate(const std::vector<std::vector<cplx>>& tx, const std::vector<std::vector<cplx>>& rx,
                           std::span<const double> powers)
{
  if (tx.size() != powers.size() || rx.size() != powers.size())
    throw estimation_error("fit_surrogate: need one tx/rx pair per power");
  std::vector<double> nu(powers.size());
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (tx[i].size() != rx[i].size() || tx[i].empty())
      throw estimation_error("fit_surrogate: tx/rx length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < tx[i].size(); ++k)
      s += std::norm(rx[i][k] - tx[i][k]);
    nu[i] = s / static_cast<double>(tx[i].size());
  }
  return fit_noise_law(powers, nu);
}

MiEstimate mi_gaussian_auxiliary(std::span<const cplx> tx, std::span<const cplx> rx, const Constellation& qam)
{
  if (tx.size() != rx.size() || tx.size() < 2)
    throw config_error("mi_gaussian_auxiliary: need at least two paired samples");
  double nu = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i)
    nu += std::norm(rx[i] - tx[i]);
  nu /= static_cast<double>(tx.size());
  if (!(nu > 0.0))
    return {std::log2(static_cast<double>(Constellation::size)), 0.0};

  const auto& pts = qam.points();
  double mean = 0.0, m2 = 0.0;
  std::array<double, Constellation::size> metric{};
  for (std::size_t i = 0; i < tx.size(); ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < Constellation::size; ++u) {
      metric[u] = -std::norm(rx[i] - pts[u]) / nu;
      peak = std::max(peak, metric[u]);
    }
    double acc = 0.0;
    for (double m : metric)
      acc += std::exp(m - peak);
    const double own = -std::norm(rx[i] - tx[i]) / nu;
    const double d = (own - peak - std::log(acc / Constellation::size)) / std::numbers::ln2;
    const double delta = d - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (d - mean);
  }
  const double var = m2 / static_cast<double>(tx.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(tx.size()))};
}

} // namespace chanmatch::ssfm
