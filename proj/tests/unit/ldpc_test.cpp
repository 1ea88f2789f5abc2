#include "chanmatch/error.hpp"
#include "chanmatch/ldpc.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

namespace chanmatch::ldpc {
namespace {

const LdpcCode& code4000()
{
  static const LdpcCode code = construct_code(4000, 0.63, 1);
  return code;
}

std::vector<bit> random_bits(std::size_t n, rng_stream& rng)
{
  std::vector<bit> b(n);
  for (auto& x : b)
    x = static_cast<bit>(rng() & 1u);
  return b;
}

std::vector<double> llr_for(std::span<const bit> cw, double magnitude)
{
  std::vector<double> l(cw.size());
  for (std::size_t i = 0; i < cw.size(); ++i)
    l[i] = cw[i] ? -magnitude : magnitude;
  return l;
}

// Every pair of rows may share at most one column.
bool four_cycle_oracle(const ParityCheckMatrix& h)
{
  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& rows : h.col_rows)
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = a + 1; b < rows.size(); ++b)
        if (!pairs.insert(std::minmax(rows[a], rows[b])).second)
          return true;
  return false;
}

TEST(LdpcConstruction, PaperRateAtBlockLength8000)
{
  const auto code = construct_code(8000, 0.63, 7);
  EXPECT_EQ(code.n(), 8000u);
  EXPECT_EQ(code.k(), 5040u);
  EXPECT_DOUBLE_EQ(code.rate(), 0.63);
  EXPECT_FALSE(four_cycle_oracle(code.matrix()));
}

TEST(LdpcConstruction, StructureAt4000)
{
  const auto& code = code4000();
  const auto& h = code.matrix();
  EXPECT_EQ(code.n(), 4000u);
  EXPECT_NEAR(code.rate(), 0.63, 0.005);
  EXPECT_EQ(gf2_rank(h), code.m());
  for (const auto& rows : h.col_rows)
    EXPECT_EQ(rows.size(), 3u);
  for (const auto& cols : h.row_cols) {
    EXPECT_GE(cols.size(), 8u);
    EXPECT_LE(cols.size(), 9u);
  }
  EXPECT_FALSE(four_cycle_oracle(h));
  EXPECT_FALSE(has_four_cycle(h));
}

TEST(LdpcConstruction, FourCycleDetectorAgreesWithOracle)
{
  const auto with = ParityCheckMatrix::from_rows(4, {{0, 1, 2}, {0, 1, 3}});
  const auto without = ParityCheckMatrix::from_rows(4, {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_TRUE(four_cycle_oracle(with));
  EXPECT_TRUE(has_four_cycle(with));
  EXPECT_FALSE(four_cycle_oracle(without));
  EXPECT_FALSE(has_four_cycle(without));
}

TEST(LdpcConstruction, DeterministicForSeed)
{
  const auto a = construct_code(1200, 0.63, 5);
  const auto b = construct_code(1200, 0.63, 5);
  const auto c = construct_code(1200, 0.63, 6);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_FALSE(a.matrix() == c.matrix());
}

TEST(LdpcConstruction, RejectsInvalidArguments)
{
  EXPECT_THROW(construct_code(999, 0.63, 1), config_error);
  EXPECT_THROW(construct_code(4000, 1.0, 1), config_error);
  EXPECT_THROW(construct_code(4000, 0.0, 1), config_error);
}

TEST(LdpcConstruction, RankDeficientMatrixRejected)
{
  const auto h = ParityCheckMatrix::from_rows(4, {{0, 1}, {2, 3}, {0, 1, 2, 3}});
  EXPECT_EQ(gf2_rank(h), 2u);
  EXPECT_THROW(LdpcCode::from_matrix(h), construction_error);
}

TEST(LdpcEncode, ZeroInfoGivesZeroCodeword)
{
  const auto& code = code4000();
  const std::vector<bit> info(code.k(), 0);
  const auto cw = code.encode(info);
  EXPECT_EQ(cw.size(), code.n());
  EXPECT_TRUE(std::all_of(cw.begin(), cw.end(), [](bit b) { return b == 0; }));
}

TEST(LdpcEncode, SystematicWithZeroSyndrome)
{
  const auto& code = code4000();
  auto rng = derive_stream(31);
  for (int t = 0; t < 20; ++t) {
    const auto info = random_bits(code.k(), rng);
    const auto cw = code.encode(info);
    EXPECT_TRUE(std::equal(info.begin(), info.end(), cw.begin()));
    EXPECT_EQ(code.matrix().syndrome_weight(cw), 0u);
  }
}

TEST(LdpcEncode, SumOfCodewordsIsCodeword)
{
  const auto& code = code4000();
  auto rng = derive_stream(32);
  const auto a = code.encode(random_bits(code.k(), rng));
  const auto b = code.encode(random_bits(code.k(), rng));
  std::vector<bit> s(a.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = a[i] ^ b[i];
  EXPECT_TRUE(code.matrix().is_codeword(s));
}

TEST(LdpcEncode, RejectsWrongLength)
{
  const auto& code = code4000();
  EXPECT_THROW(code.encode(std::vector<bit>(code.k() + 1, 0)), config_error);
}

TEST(BpDecode, SaturatedZeroCodewordConvergesImmediately)
{
  const auto& code = code4000();
  const std::vector<double> llr(code.n(), default_llr_max);
  const auto r = decode_bp(code, llr, 10);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(std::all_of(r.bits.begin(), r.bits.end(), [](bit b) { return b == 0; }));
}

TEST(BpDecode, CorrectsOnePercentFlips)
{
  const auto& code = code4000();
  auto rng = derive_stream(33);
  const auto cw = code.encode(random_bits(code.k(), rng));
  auto llr = llr_for(cw, 2.0);
  std::vector<std::size_t> idx(code.n());
  for (std::size_t i = 0; i < idx.size(); ++i)
    idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t i = 0; i < code.n() / 100; ++i)
    llr[idx[i]] = -llr[idx[i]];
  const auto r = decode_bp(code, llr, 20);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.bits, cw);
}

TEST(BpDecode, ZeroLlrsDoNotConverge)
{
  const auto& code = code4000();
  const auto r = decode_bp(code, std::vector<double>(code.n(), 0.0), 5);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 5);
}

TEST(BpDecode, ConvergedImpliesZeroSyndrome)
{
  const auto& code = code4000();
  BpDecoder dec(code);
  auto rng = derive_stream(34);
  std::normal_distribution<double> g(0.0, 1.0);
  int converged = 0;
  for (int t = 0; t < 30; ++t) {
    const double sigma = 0.5 + 0.03 * t; // spans the waterfall
    const auto cw = code.encode(random_bits(code.k(), rng));
    std::vector<double> llr(code.n());
    for (std::size_t i = 0; i < llr.size(); ++i) {
      const double s = (cw[i] ? -1.0 : 1.0) + sigma * g(rng);
      llr[i] = 2.0 * s / (sigma * sigma);
    }
    const auto r = dec.decode(llr, 15);
    EXPECT_EQ(r.syndrome_weight, code.matrix().syndrome_weight(r.bits));
    if (r.converged) {
      ++converged;
      EXPECT_EQ(r.syndrome_weight, 0u);
    }
  }
  EXPECT_GT(converged, 0);
  EXPECT_LT(converged, 30);
}

TEST(BpDecode, ChannelSymmetry)
{
  // Flipping LLR signs on the support of a codeword c turns the decode of
  // the all-zero reference into the same decode XOR c.
  const auto code = construct_code(1200, 0.63, 3);
  auto rng = derive_stream(35);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 8; ++t) {
    const double sigma = 0.75 + 0.02 * t;
    std::vector<double> llr(code.n());
    for (auto& l : llr)
      l = 2.0 * (1.0 + sigma * g(rng)) / (sigma * sigma);
    const auto c = code.encode(random_bits(code.k(), rng));
    auto flipped = llr;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i])
        flipped[i] = -flipped[i];
    const auto a = decode_bp(code, llr, 8);
    const auto b = decode_bp(code, flipped, 8);
    EXPECT_EQ(a.converged, b.converged);
    EXPECT_EQ(a.iterations, b.iterations);
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_EQ(b.bits[i], a.bits[i] ^ c[i]);
      EXPECT_EQ(b.posterior[i], c[i] ? -a.posterior[i] : a.posterior[i]);
    }
  }
}

TEST(BpDecode, SaturationKeepsValuesFinite)
{
  const auto code = construct_code(1200, 0.63, 4);
  BpDecoder dec(code);
  auto rng = derive_stream(36);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> scale(0, 3);
  const double mags[] = {1e-300, 1.0, 1e3, 1e300};
  for (int t = 0; t < 50; ++t) {
    std::vector<double> llr(code.n());
    for (auto& l : llr)
      l = u(rng) * mags[scale(rng)];
    const auto r = dec.decode(llr, 20);
    for (double p : r.posterior) {
      ASSERT_TRUE(std::isfinite(p));
      ASSERT_LE(std::abs(p), dec.llr_max());
    }
  }
}

TEST(BpDecode, RejectsBadInput)
{
  const auto& code = code4000();
  EXPECT_THROW(decode_bp(code, std::vector<double>(code.n() - 1, 0.0), 3), config_error);
  EXPECT_THROW(decode_bp(code, std::vector<double>(code.n(), 1.0), 0), config_error);
  std::vector<double> bad(code.n(), 1.0);
  bad[5] = std::nan("");
  EXPECT_THROW(decode_bp(code, bad, 3), config_error);
}

TEST(Alist, RoundTrip)
{
  const auto code = construct_code(1200, 0.63, 8);
  std::stringstream ss;
  write_alist(code.matrix(), ss);
  const auto h = read_alist(ss);
  EXPECT_EQ(h, code.matrix());

  const auto path = std::filesystem::temp_directory_path() / "chanmatch_alist_test.alist";
  write_alist(code.matrix(), path);
  const auto again = LdpcCode::from_matrix(read_alist(path));
  std::filesystem::remove(path);
  EXPECT_EQ(again.k(), code.k());
  auto rng = derive_stream(37);
  EXPECT_TRUE(again.matrix().is_codeword(again.encode(random_bits(again.k(), rng))));
}

TEST(Alist, SmallExampleFormat)
{
  const auto h = ParityCheckMatrix::from_rows(4, {{0, 1}, {1, 2, 3}});
  std::stringstream ss;
  write_alist(h, ss);
  EXPECT_EQ(ss.str(), "4 2\n2 3\n1 2 1 1\n2 3\n1 0\n1 2\n2 0\n2 0\n1 2 0\n2 3 4\n");
}

TEST(Alist, MalformedInputRejected)
{
  std::stringstream truncated("4 2\n1 3\n1 2 1 1\n");
  EXPECT_THROW(read_alist(truncated), config_error);
  std::stringstream junk("4 x\n");
  EXPECT_THROW(read_alist(junk), config_error);
  std::stringstream inconsistent("2 2\n1 1\n1 1\n1 1\n1\n2\n2\n1\n");
  EXPECT_THROW(read_alist(inconsistent), config_error);
  EXPECT_THROW(read_alist(std::filesystem::path("/nonexistent/dir/h.alist")), io_error);
}

} // namespace
} // namespace chanmatch::ldpc
