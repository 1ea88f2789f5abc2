#pragma once

#include "chanmatch/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace chanmatch::ldpc {

using bit = std::uint8_t;

// Sparse binary matrix stored both column- and row-wise.
struct ParityCheckMatrix {
  std::size_t n = 0; // columns (block length)
  std::size_t m = 0; // rows (checks)
  std::vector<std::vector<std::uint32_t>> col_rows;
  std::vector<std::vector<std::uint32_t>> row_cols;

  // Builds both adjacency views from row lists. Duplicate entries are an error.
  static ParityCheckMatrix from_rows(std::size_t n, std::vector<std::vector<std::uint32_t>> rows);

  std::size_t edges() const;
  std::size_t syndrome_weight(std::span<const bit> word) const;
  bool is_codeword(std::span<const bit> word) const { return syndrome_weight(word) == 0; }
  friend bool operator==(const ParityCheckMatrix&, const ParityCheckMatrix&) = default;
};

bool has_four_cycle(const ParityCheckMatrix& h);
std::size_t gf2_rank(const ParityCheckMatrix& h);

// Progressive-edge-growth construction with constant column weight.
// Check nodes are chosen among the ones farthest from the current variable
// node in the partial Tanner graph, lowest current degree first, remaining
// ties broken by `rng`.
ParityCheckMatrix peg_construct(std::size_t n, std::size_t m, std::size_t col_weight, rng_stream& rng);

/// Binary LDPC code with a systematic encoder: the first k codeword bits are
/// the information bits, the last m are parity.
class LdpcCode {
public:
  // Derives the systematic encoder by GF(2) elimination. Columns may be
  // permuted so that the parity positions are the last m; the stored matrix
  // is in codeword order. Throws construction_error if h lacks full row rank.
  static LdpcCode from_matrix(const ParityCheckMatrix& h);

  std::size_t n() const { return h_.n; }
  std::size_t m() const { return h_.m; }
  std::size_t k() const { return h_.n - h_.m; }
  double rate() const { return static_cast<double>(k()) / static_cast<double>(n()); }
  const ParityCheckMatrix& matrix() const { return h_; }

  std::vector<bit> encode(std::span<const bit> info) const;

private:
  ParityCheckMatrix h_;
  std::size_t words_ = 0;                         // 64-bit words per generator row
  std::vector<std::uint64_t> parity_generator_;   // m rows of `words_` words
};

// Deterministic for a fixed seed. Column weight 3; retries with derived
// seeds when the matrix is rank deficient or contains a 4-cycle.
LdpcCode construct_code(std::size_t n, double target_rate, std::uint64_t seed);

// MacKay alist text format.
void write_alist(const ParityCheckMatrix& h, std::ostream& os);
ParityCheckMatrix read_alist(std::istream& is);
void write_alist(const ParityCheckMatrix& h, const std::filesystem::path& path);
ParityCheckMatrix read_alist(const std::filesystem::path& path);

// LLR = log(Pr[bit = 0] / Pr[bit = 1]); every message is clamped to +-llr_max.
inline constexpr double default_llr_max = 30.0;

struct BpResult {
  std::vector<bit> bits;
  std::vector<double> posterior;
  bool converged = false;
  int iterations = 0;
  std::size_t syndrome_weight = 0;
};

/// Flooding-schedule sum-product decoder. Holds the message memory, so one
/// instance per thread.
class BpDecoder {
public:
  explicit BpDecoder(const LdpcCode& code, double llr_max = default_llr_max);

  // Stops early once the hard decision is a codeword and no posterior is
  // exactly zero. Hard decision: bit = 1 iff posterior < 0.
  BpResult decode(std::span<const double> llr, int max_iters);

  double llr_max() const { return llr_max_; }

private:
  const ParityCheckMatrix* h_;
  double llr_max_;
  std::vector<std::uint32_t> row_start_;
  std::vector<std::uint32_t> edge_var_;
  std::vector<std::uint32_t> var_start_;
  std::vector<std::uint32_t> var_edges_;
  std::vector<double> v2c_, c2v_, fwd_, bwd_;
};

BpResult decode_bp(const LdpcCode& code, std::span<const double> llr, int max_iters);

} // namespace chanmatch::ldpc
