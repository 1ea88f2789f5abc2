#include "chanmatch/error.hpp"
#include "chanmatch/sample_io.hpp"
#include "chanmatch/ssfm.hpp"
#include "chanmatch/units.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace chanmatch::ssfm {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Direct O(n^2) DFT in long double, independent of the library's FFT.
std::vector<std::complex<long double>> dft(std::span<const cplx> x)
{
  const std::size_t n = x.size();
  std::vector<std::complex<long double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<long double> acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ph = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) /
                             static_cast<long double>(n);
      acc += std::complex<long double>(x[t].real(), x[t].imag()) * std::polar(1.0L, ph);
    }
    out[k] = acc;
  }
  return out;
}

double energy(std::span<const cplx> x)
{
  double e = 0.0;
  for (const auto& v : x)
    e += std::norm(v);
  return e;
}

Waveform random_field(std::size_t n, double fs, double power, std::uint64_t seed)
{
  // Smooth random field: a handful of low-frequency tones.
  auto rng = derive_stream(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Waveform w;
  w.sample_rate = fs;
  w.samples.assign(n, cplx{});
  for (int tone = -8; tone <= 8; ++tone) {
    const cplx a{g(rng), g(rng)};
    for (std::size_t t = 0; t < n; ++t)
      w.samples[t] += a * std::polar(1.0, two_pi * tone * static_cast<double>(t) / static_cast<double>(n));
  }
  const double scale = std::sqrt(power / (energy(w.samples) / static_cast<double>(n)));
  for (auto& s : w.samples)
    s *= scale;
  return w;
}

std::vector<cplx> balanced_symbols(const Constellation& qam, std::size_t n, std::uint64_t seed)
{
  std::vector<cplx> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = qam.points()[i % 16];
  auto rng = derive_stream(seed);
  std::shuffle(x.begin(), x.end(), rng);
  return x;
}

FiberSystemParams single_channel(std::size_t spans, std::size_t symbols, std::size_t sps)
{
  auto p = FiberSystemParams::desk_scale();
  p.n_channels = 1;
  p.n_spans = spans;
  p.n_symbols = symbols;
  p.samples_per_symbol = sps;
  return p;
}

TEST(AsePsd, PaperConstants)
{
  const auto p = FiberSystemParams::full_scale();
  EXPECT_NEAR(p.span_gain(), 10.0, 1e-12);
  const double expected = 9.0 * 6.626e-34 * 193.41e12;
  EXPECT_NEAR(ase_psd(p) / expected, 1.0, 1e-12);
  EXPECT_NEAR(ase_psd(p) / 1.1535e-18, 1.0, 2e-4);
  EXPECT_NEAR(ase_symbol_variance(p) / 4.5627e-6, 1.0, 2e-4);
}

TEST(AsePsd, Limits)
{
  auto p = FiberSystemParams::full_scale();
  p.n_sp = 0.0;
  EXPECT_EQ(ase_psd(p), 0.0);
  p = FiberSystemParams::full_scale();
  p.span_length_km = 0.0;
  EXPECT_EQ(ase_psd(p), 0.0);
}

TEST(Edfa, NoiselessGainIsTenDecibels)
{
  const auto p = FiberSystemParams::desk_scale();
  auto w = random_field(1024, p.sample_rate(), 1e-4, 61);
  const double before = energy(w.samples);
  amplify_edfa(w, p, nullptr);
  EXPECT_NEAR(energy(w.samples) / before, 10.0, 1e-12);
}

TEST(Edfa, NoiseVarianceMatchesPsd)
{
  const auto p = FiberSystemParams::desk_scale();
  Waveform w;
  w.sample_rate = p.sample_rate();
  w.samples.assign(1 << 20, cplx{});
  auto rng = derive_stream(62);
  amplify_edfa(w, p, &rng);
  const double var = energy(w.samples) / static_cast<double>(w.samples.size());
  EXPECT_NEAR(var / (ase_psd(p) * p.sample_rate()), 1.0, 0.01);
}

TEST(Edfa, ZeroSpontaneousEmissionIsDeterministic)
{
  auto p = FiberSystemParams::desk_scale();
  p.n_sp = 0.0;
  const auto w0 = random_field(512, p.sample_rate(), 1e-4, 63);
  auto a = w0, b = w0;
  auto r1 = derive_stream(1), r2 = derive_stream(2);
  amplify_edfa(a, p, &r1);
  amplify_edfa(b, p, &r2);
  EXPECT_EQ(a.samples, b.samples);
}

TEST(Propagate, DispersionIsAllPass)
{
  auto w = random_field(512, 200e9, 1e-3, 64);
  const auto before = dft(w.samples);
  propagate(w, {0.0, -21.67e-24, 0.0}, 80.0);
  const auto after = dft(w.samples);
  long double peak = 0;
  for (const auto& v : before)
    peak = std::max(peak, std::abs(v));
  for (std::size_t k = 0; k < before.size(); ++k)
    EXPECT_NEAR(static_cast<double>((std::abs(after[k]) - std::abs(before[k])) / peak), 0.0, 1e-12);
}

TEST(Propagate, PureNonlinearPhase)
{
  const double gamma = 1.27, length = 50.0;
  auto w = random_field(1024, 200e9, 2e-3, 65);
  const auto in = w.samples;
  propagate(w, {0.0, 0.0, gamma}, length);
  for (std::size_t t = 0; t < in.size(); ++t) {
    const cplx expected = in[t] * std::polar(1.0, gamma * std::norm(in[t]) * length);
    EXPECT_LT(std::abs(w.samples[t] - expected), 1e-9 * std::sqrt(2e-3));
  }
}

TEST(Propagate, GaussianPulseBroadening)
{
  const double t0 = 50e-12, beta2 = -21.67e-24, z = 100.0;
  const std::size_t n = 8192;
  const double fs = 4e12; // window of 2 ns
  Waveform w;
  w.sample_rate = fs;
  w.samples.resize(n);
  auto time = [&](std::size_t i) { return (static_cast<double>(i) - static_cast<double>(n / 2)) / fs; };
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = std::exp(-time(i) * time(i) / (2.0 * t0 * t0));
  auto rms_width = [&](const Waveform& v) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::norm(v.samples[i]);
      m0 += p;
      m1 += p * time(i);
      m2 += p * time(i) * time(i);
    }
    return std::sqrt(m2 / m0 - (m1 / m0) * (m1 / m0));
  };
  const double w0 = rms_width(w);
  EXPECT_NEAR(w0 / (t0 / std::sqrt(2.0)), 1.0, 1e-9);
  propagate(w, {0.0, beta2, 0.0}, z);
  const double ld = t0 * t0 / std::abs(beta2);
  const double expected = w0 * std::sqrt(1.0 + (z / ld) * (z / ld));
  EXPECT_NEAR(rms_width(w) / expected, 1.0, 1e-6);
}

TEST(Propagate, LosslessSpanConservesEnergy)
{
  auto w = random_field(2048, 700e9, 5e-3, 66);
  const double before = energy(w.samples);
  const auto stats = propagate(w, {0.0, -21.67e-24, 1.27}, 50.0);
  EXPECT_GT(stats.accepted, 1u);
  EXPECT_NEAR(energy(w.samples) / before, 1.0, 1e-12);
}

TEST(Propagate, LossMatchesAttenuation)
{
  auto w = random_field(1024, 700e9, 1e-3, 67);
  const double before = energy(w.samples);
  const double alpha = db_per_km_to_neper(0.2);
  propagate(w, {alpha, -21.67e-24, 1.27}, 50.0);
  EXPECT_NEAR(energy(w.samples) / before, 0.1, 1e-12);
}

TEST(Propagate, DispersionIsInvertible)
{
  auto w = random_field(1024, 300e9, 1e-3, 68);
  const auto in = w.samples;
  propagate(w, {0.0, -21.67e-24, 0.0}, 500.0);
  propagate(w, {0.0, 21.67e-24, 0.0}, 500.0);
  for (std::size_t t = 0; t < in.size(); ++t)
    EXPECT_LT(std::abs(w.samples[t] - in[t]), 1e-9 * std::sqrt(1e-3));
}

TEST(Propagate, RejectsBadArguments)
{
  Waveform empty;
  EXPECT_THROW(propagate(empty, {}, 1.0), config_error);
  auto w = random_field(64, 100e9, 1e-3, 69);
  EXPECT_THROW(propagate(w, {}, -1.0), config_error);
  StepControl bad;
  bad.local_error = 0.0;
  EXPECT_THROW(propagate(w, {}, 1.0, bad), config_error);
}

TEST(TxWaveform, SingleChannelPower)
{
  const auto qam = build_16qam();
  const auto p = single_channel(1, 1024, 8);
  const double power = dbm_to_watt(-6.8);
  const auto w = tx_waveform({balanced_symbols(qam, 1024, 70)}, p, power);
  EXPECT_EQ(w.samples.size(), 1024u * 8u);
  EXPECT_NEAR(energy(w.samples) / static_cast<double>(w.samples.size()) / power, 1.0, 1e-3);
  EXPECT_EQ(w.power_per_channel, power);
}

TEST(TxWaveform, TwoChannelsOccupyDisjointBands)
{
  const auto qam = build_16qam();
  auto p = single_channel(1, 64, 16);
  p.n_channels = 2;
  const auto w = tx_waveform({balanced_symbols(qam, 64, 71), balanced_symbols(qam, 64, 72)}, p, 1e-3);
  const auto spec = dft(w.samples);
  const double fs = w.sample_rate;
  const auto n = spec.size();
  const double edge = 0.5 * p.symbol_rate * (1.0 + p.rolloff);
  long double inside_lo = 0, inside_hi = 0, guard = 0, outside = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = (k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n)) * fs /
                     static_cast<double>(n);
    const long double e = std::norm(spec[k]);
    if (std::abs(f - 25e9) < edge - 1e9)
      inside_hi += e;
    else if (std::abs(f + 25e9) < edge - 1e9)
      inside_lo += e;
    else if (std::abs(f) < 25e9 - edge - 1e9)
      guard += e;
    else if (std::abs(f) > 25e9 + edge + 1e9)
      outside += e;
  }
  EXPECT_GT(inside_lo, 0);
  EXPECT_GT(inside_hi, 0);
  EXPECT_LT(guard / inside_lo, 1e-20L);
  EXPECT_LT(outside / inside_lo, 1e-20L);
}

TEST(TxWaveform, ZeroSymbolsGiveZeroWaveform)
{
  const auto p = single_channel(1, 128, 8);
  const auto w = tx_waveform({std::vector<cplx>(128)}, p, 1e-3);
  for (const auto& s : w.samples)
    EXPECT_EQ(s, cplx{});
}

TEST(TxWaveform, RejectsAliasingAndShapeErrors)
{
  const auto qam = build_16qam();
  auto p = FiberSystemParams::full_scale();
  p.n_symbols = 64;
  p.samples_per_symbol = 2;
  std::vector<std::vector<cplx>> five(5, balanced_symbols(qam, 64, 73));
  EXPECT_THROW(tx_waveform(five, p, 1e-3), config_error);
  p.samples_per_symbol = 16;
  five[3].resize(32);
  EXPECT_THROW(tx_waveform(five, p, 1e-3), config_error);
  EXPECT_THROW(tx_waveform({balanced_symbols(qam, 64, 73)}, p, 1e-3), config_error);
}

TEST(FiberParams, Validation)
{
  EXPECT_NO_THROW(FiberSystemParams::full_scale().validate());
  EXPECT_NO_THROW(FiberSystemParams::desk_scale().validate());
  auto p = FiberSystemParams::full_scale();
  p.symbol_rate = 49e9;
  EXPECT_THROW(p.validate(), config_error);
  p = FiberSystemParams::full_scale();
  p.gamma = -1.0;
  EXPECT_THROW(p.validate(), config_error);
}

TEST(RxDsp, BackToBackIsNyquist)
{
  const auto qam = build_16qam();
  const auto p = single_channel(1, 1024, 8);
  const auto tx = balanced_symbols(qam, 1024, 74);
  const auto w = tx_waveform({tx}, p, dbm_to_watt(-6.8));
  RxOptions opt;
  opt.backpropagate = false;
  const auto rx = rx_dsp(w, p, tx, opt);
  EXPECT_LT(evm(tx, rx), 1e-3);
}

TEST(RxDsp, BackToBackMultiChannel)
{
  const auto qam = build_16qam();
  auto p = single_channel(1, 256, 16);
  p.n_channels = 5;
  std::vector<std::vector<cplx>> sym;
  for (std::uint64_t c = 0; c < 5; ++c)
    sym.push_back(balanced_symbols(qam, 256, 75 + c));
  const auto w = tx_waveform(sym, p, 1e-3);
  RxOptions opt;
  opt.backpropagate = false;
  EXPECT_LT(evm(sym[2], rx_dsp(w, p, sym[2], opt)), 1e-3);
}

TEST(Link, SingleChannelBackpropagationSelfInverts)
{
  const auto p = single_channel(10, 1024, 4);
  LinkOptions opt;
  opt.ase = false;
  const auto run = simulate_link(p, dbm_to_watt(-6.8), 80, opt);
  EXPECT_LT(evm(run.tx, run.rx), 1e-3);
}

TEST(Link, SameSeedSameResult)
{
  const auto p = single_channel(2, 256, 4);
  const auto a = simulate_link(p, 1e-3, 81);
  const auto b = simulate_link(p, 1e-3, 81);
  EXPECT_EQ(a.tx, b.tx);
  EXPECT_EQ(a.rx, b.rx);
}

TEST(Link, InterferenceGrowsWithPower)
{
  auto p = FiberSystemParams::desk_scale();
  p.n_channels = 5;
  p.n_spans = 5;
  p.n_symbols = 256;
  p.samples_per_symbol = 8;
  LinkOptions opt;
  opt.ase = false;
  double prev = 0.0;
  for (double dbm : {-10.0, -6.8, -3.0}) {
    const auto run = simulate_link(p, dbm_to_watt(dbm), 82, opt);
    const double e = evm(run.tx, run.rx);
    EXPECT_GT(e, prev) << dbm << " dBm";
    prev = e;
  }
}

TEST(Fit, RecoversExactLaw)
{
  const double s2 = 3e-6, k = 4e5;
  std::vector<double> powers, nu;
  for (double dbm : {-10.0, -6.0, -2.0, 2.0, 6.0}) {
    powers.push_back(dbm_to_watt(dbm));
    nu.push_back((s2 + k * std::pow(powers.back(), 3.0)) / powers.back());
  }
  const auto fit = fit_noise_law(powers, nu);
  EXPECT_NEAR(fit.params.sigma2_ase / s2, 1.0, 0.01);
  EXPECT_NEAR(fit.params.kappa / k, 1.0, 0.01);
  EXPECT_LT(fit.residual, 1e-9);
}

TEST(Fit, RejectsDegenerateInput)
{
  const std::vector<double> two{1e-4, 1e-3}, three{1e-4, 1e-3, 1e-2};
  EXPECT_THROW(fit_noise_law(two, two), estimation_error);
  EXPECT_THROW(fit_noise_law(three, std::vector<double>{0.0, 0.0, 0.0}), estimation_error);
  EXPECT_THROW(fit_noise_law(three, two), estimation_error);
}

TEST(Fit, LinearLinkHasNoCubicTerm)
{
  auto p = single_channel(5, 512, 4);
  p.gamma = 0.0;
  std::vector<double> powers;
  std::vector<std::vector<cplx>> tx, rx;
  for (double dbm : {-10.0, -6.0, -2.0, 2.0, 6.0}) {
    powers.push_back(dbm_to_watt(dbm));
    auto run = simulate_link(p, powers.back(), 83);
    tx.push_back(std::move(run.tx));
    rx.push_back(std::move(run.rx));
  }
  const auto fit = fit_surrogate(tx, rx, powers);
  for (double pw : powers)
    EXPECT_LT(std::abs(fit.raw_kappa) * pw * pw * pw, 0.05 * fit.params.sigma2_ase);
  EXPECT_NEAR(fit.params.sigma2_ase / ase_symbol_variance(p), 1.0, 0.15);
}

TEST(Fit, DeskScaleOptimumIsInterior)
{
  auto p = FiberSystemParams::desk_scale();
  p.n_symbols = 512;
  p.samples_per_symbol = 8;
  std::vector<double> powers;
  std::vector<std::vector<cplx>> tx, rx;
  for (double dbm : {-10.0, -6.0, -2.0, 2.0, 6.0}) {
    powers.push_back(dbm_to_watt(dbm));
    auto run = simulate_link(p, powers.back(), 84);
    tx.push_back(std::move(run.tx));
    rx.push_back(std::move(run.rx));
  }
  const auto fit = fit_surrogate(tx, rx, powers);
  ASSERT_GT(fit.params.kappa, 0.0);
  double best = -1.0, best_dbm = 0.0;
  for (double dbm = -10.0; dbm <= 6.0 + 1e-9; dbm += 0.01) {
    const double s = effective_snr(fit.params, dbm_to_watt(dbm));
    if (s > best) {
      best = s;
      best_dbm = dbm;
    }
  }
  EXPECT_GT(best_dbm, -10.0 + 0.05);
  EXPECT_LT(best_dbm, 6.0 - 0.05);
}

TEST(MiAuxiliary, AgreesWithSurrogateOnGaussianData)
{
  const auto qam = build_16qam();
  const std::size_t n = 100000;
  const auto tx = balanced_symbols(qam, n, 85);
  auto rng = derive_stream(86);
  const NlinParams law{0.0328, 0.0, 0.0};
  const auto rx = transmit(tx, {1.0, n}, law, rng);
  const auto aux = mi_gaussian_auxiliary(tx, rx, qam);
  auto rng2 = derive_stream(87);
  const auto ref = mi_uniform(law, 1.0, n, rng2);
  EXPECT_NEAR(aux.bits, ref.bits, 0.02);
  EXPECT_GT(aux.std_error, 0.0);
}

TEST(Evm, KnownValues)
{
  const std::vector<cplx> a{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  EXPECT_EQ(evm(a, a), 0.0);
  auto b = a;
  for (auto& v : b)
    v *= 1.1;
  EXPECT_NEAR(evm(a, b), 0.1, 1e-12);
  EXPECT_THROW(evm(a, std::vector<cplx>(3)), config_error);
}

TEST(SampleIo, DumpRoundTrip)
{
  const auto dir = std::filesystem::temp_directory_path() / "chanmatch_dump_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "rx.c128";
  std::vector<cplx> x{{1.5, -2.0}, {0.0, 1e-300}, {-3.25, 7.0}};
  write_complex_dump(path, x, 43.95e9);
  EXPECT_EQ(std::filesystem::file_size(path), 48u);
  const auto back = read_complex_dump(path);
  EXPECT_EQ(back.samples, x);
  EXPECT_EQ(back.sample_rate, 43.95e9);
  std::ifstream side(path.string() + ".txt");
  std::string all((std::istreambuf_iterator<char>(side)), std::istreambuf_iterator<char>());
  EXPECT_NE(all.find("length 3"), std::string::npos);
  std::filesystem::resize_file(path, 40);
  EXPECT_THROW(read_complex_dump(path), io_error);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(read_complex_dump(dir / "missing.c128"), io_error);
}

} // namespace
} // namespace chanmatch::ssfm
