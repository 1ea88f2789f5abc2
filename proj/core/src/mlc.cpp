#include "chanmatch/mlc.hpp"

#include "chanmatch/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace chanmatch {

const char* to_string(EstimateStructure s)
{
  switch (s) {
  case EstimateStructure::scalar: return "scalar";
  case EstimateStructure::full: return "full";
  case EstimateStructure::per_ring: return "per_ring";
  }
  return "?";
}

EstimateStructure parse_structure(const std::string& s)
{
  if (s == "scalar")
    return EstimateStructure::scalar;
  if (s == "full" || s == "full-2x2")
    return EstimateStructure::full;
  if (s == "per_ring" || s == "per-ring")
    return EstimateStructure::per_ring;
  throw config_error("unknown estimate structure '" + s + "'");
}

NoiseEstimate NoiseEstimate::scalar(double nu)
{
  NoiseEstimate e;
  e.structure = EstimateStructure::scalar;
  e.variance = nu;
  e.covariance = {nu / 2.0, 0.0, nu / 2.0};
  e.ring_variance = {nu, nu, nu};
  return e;
}

NoiseEstimate NoiseEstimate::full(double xx, double xy, double yy)
{
  NoiseEstimate e;
  e.structure = EstimateStructure::full;
  e.variance = xx + yy;
  e.covariance = {xx, xy, yy};
  e.ring_variance = {e.variance, e.variance, e.variance};
  return e;
}

NoiseEstimate NoiseEstimate::per_ring(const std::array<double, Constellation::n_rings>& nu)
{
  NoiseEstimate e;
  e.structure = EstimateStructure::per_ring;
  e.ring_variance = nu;
  // Ring multiplicities 4, 8, 4 under uniform input.
  e.variance = 0.25 * nu[0] + 0.5 * nu[1] + 0.25 * nu[2];
  e.covariance = {e.variance / 2.0, 0.0, e.variance / 2.0};
  return e;
}

void NoiseEstimate::validate() const
{
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  switch (structure) {
  case EstimateStructure::scalar:
    if (!positive(variance))
      throw config_error("noise estimate: variance must be positive");
    break;
  case EstimateStructure::full: {
    const auto [xx, xy, yy] = covariance;
    if (!positive(xx) || !positive(yy) || !std::isfinite(xy) || !(xx * yy - xy * xy > 0.0))
      throw config_error("noise estimate: covariance must be positive definite");
    break;
  }
  case EstimateStructure::per_ring:
    for (double v : ring_variance)
      if (!positive(v))
        throw config_error("noise estimate: ring variances must be positive");
    break;
  }
}

MlcFrame mlc_encode(std::span<const bit> info, const ldpc::LdpcCode& code, const Constellation& qam)
{
  const std::size_t n = code.n(), k = code.k();
  if (info.size() != k + 3 * n)
    throw config_error("mlc_encode: expected " + std::to_string(k + 3 * n) + " information bits, got " +
                       std::to_string(info.size()));
  MlcFrame f;
  f.ldpc_codeword = code.encode(info.first(k));
  f.upper_bits.assign(info.begin() + static_cast<std::ptrdiff_t>(k), info.end());
  f.symbols = remap(f.ldpc_codeword, f.upper_bits, qam);
  return f;
}

std::vector<bit> mlc_info_bits(std::span<const bit> codeword, std::span<const bit> upper, std::size_t k)
{
  if (k > codeword.size())
    throw config_error("mlc_info_bits: k exceeds codeword length");
  std::vector<bit> out;
  out.reserve(k + upper.size());
  out.insert(out.end(), codeword.begin(), codeword.begin() + static_cast<std::ptrdiff_t>(k));
  out.insert(out.end(), upper.begin(), upper.end());
  return out;
}

namespace {

// Per-candidate log-likelihood up to a common constant.
struct PointMetric {
  EstimateStructure structure;
  double inv_nu = 0.0;
  std::array<double, Constellation::size> ring_inv{};
  std::array<double, Constellation::size> ring_log{};
  double pxx = 0.0, pxy = 0.0, pyy = 0.0; // half the precision matrix

  PointMetric(const NoiseEstimate& est, const Constellation& qam) : structure(est.structure)
  {
    est.validate();
    switch (structure) {
    case EstimateStructure::scalar: inv_nu = 1.0 / est.variance; break;
    case EstimateStructure::per_ring:
      for (std::size_t v = 0; v < Constellation::size; ++v) {
        const double nu = est.ring_variance[qam.ring_index()[v]];
        ring_inv[v] = 1.0 / nu;
        ring_log[v] = std::log(nu);
      }
      break;
    case EstimateStructure::full: {
      const auto [xx, xy, yy] = est.covariance;
      const double det = xx * yy - xy * xy;
      pxx = 0.5 * yy / det;
      pxy = -xy / det; // cross term appears twice in e^T P e / 2
      pyy = 0.5 * xx / det;
      break;
    }
    }
  }

  double operator()(cplx e, std::size_t v) const
  {
    switch (structure) {
    case EstimateStructure::scalar: return -std::norm(e) * inv_nu;
    case EstimateStructure::per_ring: return -std::norm(e) * ring_inv[v] - ring_log[v];
    case EstimateStructure::full: {
      const double a = e.real(), b = e.imag();
      return -(pxx * a * a + pxy * a * b + pyy * b * b);
    }
    }
    return 0.0;
  }
};

double log_sum_exp(const double* m, std::size_t count)
{
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i)
    peak = std::max(peak, m[i]);
  double acc = 0.0;
  for (std::size_t i = 0; i < count; ++i)
    acc += std::exp(m[i] - peak);
  return peak + std::log(acc);
}

} // namespace

std::vector<double> llr_level0(std::span<const cplx> y, const NoiseEstimate& est, const Constellation& qam)
{
  const PointMetric metric(est, qam);
  const auto& pts = qam.points();
  std::array<std::size_t, 8> set0{}, set1{};
  std::size_t i0 = 0, i1 = 0;
  for (std::size_t v = 0; v < Constellation::size; ++v)
    (qam.labels()[v].b0 ? set1[i1++] : set0[i0++]) = v;

  std::vector<double> llr(y.size());
  std::array<double, 8> m0{}, m1{};
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      m0[j] = metric(y[i] - pts[set0[j]], set0[j]);
      m1[j] = metric(y[i] - pts[set1[j]], set1[j]);
    }
    llr[i] = log_sum_exp(m0.data(), 8) - log_sum_exp(m1.data(), 8);
  }
  return llr;
}

std::vector<bit> decide_upper(std::span<const cplx> y, std::span<const bit> level0_bits,
                              const NoiseEstimate& est, const Constellation& qam)
{
  if (y.size() != level0_bits.size())
    throw config_error("decide_upper: symbol and level-0 lengths differ");
  const PointMetric metric(est, qam);
  const auto& pts = qam.points();
  std::vector<bit> upper(3 * y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const unsigned b0 = level0_bits[i] & 1u;
    double best = -std::numeric_limits<double>::infinity();
    unsigned best_v = 0;
    // Candidates visited in increasing label value; strict > keeps the lowest on ties.
    for (unsigned v = b0; v < Constellation::size; v += 2) {
      const double m = metric(y[i] - pts[v], v);
      if (m > best) {
        best = m;
        best_v = v;
      }
    }
    const Label lab = Label::from_value(best_v);
    upper[3 * i] = lab.b1;
    upper[3 * i + 1] = lab.b2;
    upper[3 * i + 2] = lab.b3;
  }
  return upper;
}

std::vector<cplx> remap(std::span<const bit> level0_bits, std::span<const bit> upper_bits, const Constellation& qam)
{
  if (upper_bits.size() != 3 * level0_bits.size())
    throw config_error("remap: expected 3 upper bits per level-0 bit");
  std::vector<cplx> x(level0_bits.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = qam.map_bits(level0_bits[i] & 1u, upper_bits[3 * i] & 1u, upper_bits[3 * i + 1] & 1u,
                        upper_bits[3 * i + 2] & 1u);
  return x;
}

} // namespace chanmatch
