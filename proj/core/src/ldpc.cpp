#include "chanmatch/ldpc.hpp"

#include "chanmatch/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace chanmatch::ldpc {

ParityCheckMatrix ParityCheckMatrix::from_rows(std::size_t n, std::vector<std::vector<std::uint32_t>> rows)
{
  ParityCheckMatrix h;
  h.n = n;
  h.m = rows.size();
  h.col_rows.assign(n, {});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& row = rows[r];
    std::sort(row.begin(), row.end());
    if (std::adjacent_find(row.begin(), row.end()) != row.end())
      throw config_error("parity-check matrix: duplicate entry in row " + std::to_string(r));
    for (auto c : row) {
      if (c >= n)
        throw config_error("parity-check matrix: column index out of range");
      h.col_rows[c].push_back(static_cast<std::uint32_t>(r));
    }
  }
  h.row_cols = std::move(rows);
  return h;
}

std::size_t ParityCheckMatrix::edges() const
{
  std::size_t e = 0;
  for (const auto& r : row_cols)
    e += r.size();
  return e;
}

std::size_t ParityCheckMatrix::syndrome_weight(std::span<const bit> word) const
{
  if (word.size() != n)
    throw config_error("syndrome: word length does not match block length");
  std::size_t w = 0;
  for (const auto& row : row_cols) {
    unsigned parity = 0;
    for (auto c : row)
      parity ^= word[c];
    w += parity & 1u;
  }
  return w;
}

bool has_four_cycle(const ParityCheckMatrix& h)
{
  // Two columns sharing two rows. Mark, for each row pair seen through a
  // column, the first column that produced it.
  std::vector<std::int32_t> seen(h.m, -1);
  for (std::size_t r = 0; r < h.m; ++r) {
    std::fill(seen.begin(), seen.end(), -1);
    for (auto c : h.row_cols[r]) {
      for (auto r2 : h.col_rows[c]) {
        if (r2 <= r)
          continue;
        if (seen[r2] >= 0 && seen[r2] != static_cast<std::int32_t>(c))
          return true;
        seen[r2] = static_cast<std::int32_t>(c);
      }
    }
  }
  return false;
}

namespace {

struct DenseGf2 {
  std::size_t rows = 0, cols = 0, words = 0;
  std::vector<std::uint64_t> data;

  DenseGf2(const ParityCheckMatrix& h) : rows(h.m), cols(h.n), words((h.n + 63) / 64), data(rows * words, 0)
  {
    for (std::size_t r = 0; r < h.m; ++r)
      for (auto c : h.row_cols[r])
        data[r * words + c / 64] |= std::uint64_t{1} << (c % 64);
  }
  std::uint64_t* row(std::size_t r) { return data.data() + r * words; }
  bool get(std::size_t r, std::size_t c) const { return (data[r * words + c / 64] >> (c % 64)) & 1u; }
  void swap_rows(std::size_t a, std::size_t b)
  {
    if (a != b)
      std::swap_ranges(row(a), row(a) + words, row(b));
  }
  void xor_into(std::size_t dst, std::size_t src)
  {
    auto* d = row(dst);
    const auto* s = row(src);
    for (std::size_t w = 0; w < words; ++w)
      d[w] ^= s[w];
  }
};

// Reduced row echelon form, pivoting on columns from the right. Returns the
// pivot column of each pivot row (size == rank).
std::vector<std::size_t> eliminate(DenseGf2& a)
{
  std::vector<std::size_t> pivots;
  std::size_t next = 0;
  for (std::size_t ci = a.cols; ci-- > 0 && next < a.rows;) {
    std::size_t p = next;
    while (p < a.rows && !a.get(p, ci))
      ++p;
    if (p == a.rows)
      continue;
    a.swap_rows(p, next);
    for (std::size_t r = 0; r < a.rows; ++r)
      if (r != next && a.get(r, ci))
        a.xor_into(r, next);
    pivots.push_back(ci);
    ++next;
  }
  return pivots;
}

} // namespace

std::size_t gf2_rank(const ParityCheckMatrix& h)
{
  DenseGf2 a(h);
  return eliminate(a).size();
}

ParityCheckMatrix peg_construct(std::size_t n, std::size_t m, std::size_t col_weight, rng_stream& rng)
{
  if (m == 0 || n <= m || col_weight == 0 || col_weight > m)
    throw config_error("peg_construct: invalid dimensions");

  std::vector<std::vector<std::uint32_t>> var_checks(n);
  std::vector<std::vector<std::uint32_t>> check_vars(m);

  // Epoch-stamped visit marks avoid clearing per search.
  std::vector<std::uint32_t> check_mark(m, 0), var_mark(n, 0);
  std::uint32_t epoch = 0;
  std::vector<std::uint32_t> next_frontier, candidates;

  auto pick_min_degree = [&](const std::vector<std::uint32_t>& pool) {
    std::size_t best = SIZE_MAX;
    candidates.clear();
    for (auto c : pool) {
      const auto d = check_vars[c].size();
      if (d < best) {
        best = d;
        candidates.clear();
      }
      if (d == best)
        candidates.push_back(c);
    }
    std::uniform_int_distribution<std::size_t> u(0, candidates.size() - 1);
    return candidates[u(rng)];
  };

  // Row degrees are capped at ceil(n w / m) so they stay within one of the mean.
  const std::size_t cap = (n * col_weight + m - 1) / m;
  auto open_checks = [&](const std::vector<std::uint32_t>& group, std::vector<std::uint32_t>& out) {
    out.clear();
    for (auto c : group)
      if (check_vars[c].size() < cap)
        out.push_back(c);
    return !out.empty();
  };

  std::vector<std::uint32_t> pool, all_checks(m), unreached;
  std::iota(all_checks.begin(), all_checks.end(), 0u);
  std::vector<std::vector<std::uint32_t>> layers;
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t t = 0; t < col_weight; ++t) {
      if (t == 0) {
        if (!open_checks(all_checks, pool))
          pool = all_checks;
      } else {
        ++epoch;
        std::size_t reached = 0;
        var_mark[v] = epoch;
        layers.assign(1, {});
        for (auto c : var_checks[v]) {
          check_mark[c] = epoch;
          layers[0].push_back(c);
          ++reached;
        }
        unreached.clear();
        while (true) {
          next_frontier.clear();
          for (auto c : layers.back()) {
            for (auto u : check_vars[c]) {
              if (var_mark[u] == epoch)
                continue;
              var_mark[u] = epoch;
              for (auto c2 : var_checks[u]) {
                if (check_mark[c2] == epoch)
                  continue;
                check_mark[c2] = epoch;
                next_frontier.push_back(c2);
              }
            }
          }
          if (next_frontier.empty()) {
            // Tree stopped growing: any unreached check keeps the graph acyclic.
            for (std::uint32_t c = 0; c < m; ++c)
              if (check_mark[c] != epoch)
                unreached.push_back(c);
            break;
          }
          layers.push_back(next_frontier);
          reached += next_frontier.size();
          if (reached == m)
            break;
        }
        // Farthest open checks first, then successively closer layers.
        bool found = open_checks(unreached, pool);
        for (std::size_t l = layers.size(); !found && l-- > 1;)
          found = open_checks(layers[l], pool);
        if (!found)
          pool = unreached.empty() ? layers.back() : unreached;
      }
      const auto c = pick_min_degree(pool);
      var_checks[v].push_back(c);
      check_vars[c].push_back(static_cast<std::uint32_t>(v));
    }
  }
  return ParityCheckMatrix::from_rows(n, std::move(check_vars));
}

LdpcCode LdpcCode::from_matrix(const ParityCheckMatrix& h)
{
  DenseGf2 a(h);
  const auto pivots = eliminate(a);
  if (pivots.size() != h.m)
    throw construction_error("parity-check matrix is rank deficient (rank " + std::to_string(pivots.size()) +
                             " < " + std::to_string(h.m) + ")");

  std::vector<bool> is_pivot(h.n, false);
  for (auto c : pivots)
    is_pivot[c] = true;

  // New column order: information columns ascending, then the pivot column
  // of each reduced row.
  std::vector<std::uint32_t> order;
  order.reserve(h.n);
  for (std::uint32_t c = 0; c < h.n; ++c)
    if (!is_pivot[c])
      order.push_back(c);
  for (auto c : pivots)
    order.push_back(static_cast<std::uint32_t>(c));

  std::vector<std::uint32_t> new_index(h.n);
  for (std::uint32_t i = 0; i < h.n; ++i)
    new_index[order[i]] = i;

  std::vector<std::vector<std::uint32_t>> rows(h.m);
  for (std::size_t r = 0; r < h.m; ++r) {
    rows[r].reserve(h.row_cols[r].size());
    for (auto c : h.row_cols[r])
      rows[r].push_back(new_index[c]);
  }

  LdpcCode code;
  code.h_ = ParityCheckMatrix::from_rows(h.n, std::move(rows));
  const std::size_t k = h.n - h.m;
  code.words_ = (k + 63) / 64;
  code.parity_generator_.assign(h.m * code.words_, 0);
  for (std::size_t r = 0; r < h.m; ++r) {
    auto* g = code.parity_generator_.data() + r * code.words_;
    for (std::size_t i = 0; i < k; ++i)
      if (a.get(r, order[i]))
        g[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  return code;
}

std::vector<bit> LdpcCode::encode(std::span<const bit> info) const
{
  if (info.size() != k())
    throw config_error("encode: expected " + std::to_string(k()) + " information bits");
  std::vector<std::uint64_t> packed(words_, 0);
  for (std::size_t i = 0; i < info.size(); ++i)
    if (info[i] & 1u)
      packed[i / 64] |= std::uint64_t{1} << (i % 64);

  std::vector<bit> c(n());
  std::copy(info.begin(), info.end(), c.begin());
  for (std::size_t r = 0; r < m(); ++r) {
    const auto* g = parity_generator_.data() + r * words_;
    unsigned acc = 0;
    for (std::size_t w = 0; w < words_; ++w)
      acc += static_cast<unsigned>(std::popcount(g[w] & packed[w]));
    c[k() + r] = static_cast<bit>(acc & 1u);
  }
  return c;
}

LdpcCode construct_code(std::size_t n, double target_rate, std::uint64_t seed)
{
  if (n < 1000)
    throw config_error("construct_code: block length must be at least 1000");
  if (!(target_rate > 0.0 && target_rate < 1.0))
    throw config_error("construct_code: rate must lie in (0, 1)");
  const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - target_rate)));
  const double realized = static_cast<double>(n - m) / static_cast<double>(n);
  if (std::abs(realized - target_rate) > 0.005)
    throw config_error("construct_code: block length cannot realize the target rate");

  constexpr int max_attempts = 16;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    auto rng = derive_stream(seed, 0x7065676cULL, static_cast<std::uint64_t>(attempt));
    auto h = peg_construct(n, m, 3, rng);
    if (has_four_cycle(h))
      continue;
    try {
      return LdpcCode::from_matrix(h);
    } catch (const construction_error&) {
      continue;
    }
  }
  throw construction_error("construct_code: no full-rank, 4-cycle-free matrix after " +
                           std::to_string(max_attempts) + " attempts");
}

void write_alist(const ParityCheckMatrix& h, std::ostream& os)
{
  std::size_t max_col = 0, max_row = 0;
  for (const auto& c : h.col_rows)
    max_col = std::max(max_col, c.size());
  for (const auto& r : h.row_cols)
    max_row = std::max(max_row, r.size());

  os << h.n << ' ' << h.m << '\n' << max_col << ' ' << max_row << '\n';
  for (std::size_t c = 0; c < h.n; ++c)
    os << h.col_rows[c].size() << (c + 1 == h.n ? '\n' : ' ');
  for (std::size_t r = 0; r < h.m; ++r)
    os << h.row_cols[r].size() << (r + 1 == h.m ? '\n' : ' ');

  auto emit = [&os](const std::vector<std::uint32_t>& idx, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) {
      os << (i < idx.size() ? idx[i] + 1 : 0u);
      os << (i + 1 == width ? '\n' : ' ');
    }
  };
  for (const auto& c : h.col_rows)
    emit(c, max_col);
  for (const auto& r : h.row_cols)
    emit(r, max_row);
}

namespace {

std::vector<std::size_t> read_line_numbers(std::istream& is)
{
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::vector<std::size_t> out;
    long long v = 0;
    while (ss >> v) {
      if (v < 0)
        throw config_error("alist: negative entry");
      out.push_back(static_cast<std::size_t>(v));
    }
    if (!ss.eof())
      throw config_error("alist: non-numeric token in line '" + line + "'");
    if (!out.empty())
      return out;
  }
  throw config_error("alist: unexpected end of input");
}

} // namespace

ParityCheckMatrix read_alist(std::istream& is)
{
  const auto dims = read_line_numbers(is);
  if (dims.size() != 2 || dims[0] == 0 || dims[1] == 0)
    throw config_error("alist: bad dimension line");
  const std::size_t n = dims[0], m = dims[1];
  const auto maxes = read_line_numbers(is);
  if (maxes.size() != 2)
    throw config_error("alist: bad max-degree line");

  // Degree lists may span several lines.
  auto read_count = [&](std::size_t count) {
    std::vector<std::size_t> v;
    while (v.size() < count) {
      auto more = read_line_numbers(is);
      v.insert(v.end(), more.begin(), more.end());
    }
    if (v.size() != count)
      throw config_error("alist: degree list length mismatch");
    return v;
  };
  const auto col_deg = read_count(n);
  const auto row_deg = read_count(m);

  std::vector<std::vector<std::uint32_t>> cols(n);
  for (std::size_t c = 0; c < n; ++c) {
    auto entries = read_line_numbers(is);
    for (auto e : entries) {
      if (e == 0)
        continue;
      if (e > m)
        throw config_error("alist: row index out of range");
      cols[c].push_back(static_cast<std::uint32_t>(e - 1));
    }
    if (cols[c].size() != col_deg[c])
      throw config_error("alist: column " + std::to_string(c + 1) + " degree mismatch");
  }
  std::vector<std::vector<std::uint32_t>> rows(m);
  for (std::size_t r = 0; r < m; ++r) {
    auto entries = read_line_numbers(is);
    for (auto e : entries) {
      if (e == 0)
        continue;
      if (e > n)
        throw config_error("alist: column index out of range");
      rows[r].push_back(static_cast<std::uint32_t>(e - 1));
    }
    if (rows[r].size() != row_deg[r])
      throw config_error("alist: row " + std::to_string(r + 1) + " degree mismatch");
  }

  auto h = ParityCheckMatrix::from_rows(n, std::move(rows));
  for (std::size_t c = 0; c < n; ++c) {
    std::sort(cols[c].begin(), cols[c].end());
    if (cols[c] != h.col_rows[c])
      throw config_error("alist: column and row lists disagree at column " + std::to_string(c + 1));
  }
  return h;
}

void write_alist(const ParityCheckMatrix& h, const std::filesystem::path& path)
{
  std::ofstream os(path);
  if (!os)
    throw io_error("cannot open " + path.string() + " for writing");
  write_alist(h, os);
  if (!os)
    throw io_error("write failed: " + path.string());
}

ParityCheckMatrix read_alist(const std::filesystem::path& path)
{
  std::ifstream is(path);
  if (!is)
    throw io_error("cannot open " + path.string());
  return read_alist(is);
}

BpDecoder::BpDecoder(const LdpcCode& code, double llr_max) : h_(&code.matrix()), llr_max_(llr_max)
{
  const auto& h = *h_;
  row_start_.assign(h.m + 1, 0);
  for (std::size_t r = 0; r < h.m; ++r)
    row_start_[r + 1] = row_start_[r] + static_cast<std::uint32_t>(h.row_cols[r].size());
  const auto e_total = row_start_.back();
  edge_var_.resize(e_total);
  var_start_.assign(h.n + 1, 0);
  for (std::size_t c = 0; c < h.n; ++c)
    var_start_[c + 1] = var_start_[c] + static_cast<std::uint32_t>(h.col_rows[c].size());
  var_edges_.resize(e_total);
  std::vector<std::uint32_t> fill(h.n, 0);
  for (std::size_t r = 0; r < h.m; ++r) {
    for (std::uint32_t j = 0; j < h.row_cols[r].size(); ++j) {
      const auto e = row_start_[r] + j;
      const auto c = h.row_cols[r][j];
      edge_var_[e] = c;
      var_edges_[var_start_[c] + fill[c]++] = e;
    }
  }
  v2c_.resize(e_total);
  c2v_.resize(e_total);
  std::size_t max_row = 0;
  for (const auto& r : h.row_cols)
    max_row = std::max(max_row, r.size());
  fwd_.resize(max_row + 1);
  bwd_.resize(max_row + 1);
}

BpResult BpDecoder::decode(std::span<const double> llr, int max_iters)
{
  const auto& h = *h_;
  if (llr.size() != h.n)
    throw config_error("decode_bp: LLR vector length does not match block length");
  if (max_iters < 1)
    throw config_error("decode_bp: max_iters must be at least 1");

  const double lim = llr_max_;
  auto clamp = [lim](double x) { return std::clamp(x, -lim, lim); };

  BpResult res;
  res.bits.assign(h.n, 0);
  res.posterior.assign(h.n, 0.0);

  std::vector<double> channel(h.n);
  for (std::size_t c = 0; c < h.n; ++c) {
    if (!std::isfinite(llr[c]))
      throw config_error("decode_bp: non-finite input LLR");
    channel[c] = clamp(llr[c]);
    for (auto i = var_start_[c]; i < var_start_[c + 1]; ++i)
      v2c_[var_edges_[i]] = channel[c];
  }

  for (int it = 1; it <= max_iters; ++it) {
    // Check nodes: tanh rule with forward/backward partial products.
    for (std::size_t r = 0; r < h.m; ++r) {
      const auto b = row_start_[r];
      const auto d = row_start_[r + 1] - b;
      fwd_[0] = 1.0;
      for (std::uint32_t j = 0; j < d; ++j)
        fwd_[j + 1] = fwd_[j] * std::tanh(0.5 * v2c_[b + j]);
      bwd_[d] = 1.0;
      for (std::uint32_t j = d; j-- > 0;)
        bwd_[j] = bwd_[j + 1] * std::tanh(0.5 * v2c_[b + j]);
      for (std::uint32_t j = 0; j < d; ++j)
        c2v_[b + j] = clamp(2.0 * std::atanh(fwd_[j] * bwd_[j + 1]));
    }

    // Variable nodes and posteriors.
    bool undecided = false;
    for (std::size_t c = 0; c < h.n; ++c) {
      double total = channel[c];
      for (auto i = var_start_[c]; i < var_start_[c + 1]; ++i)
        total += c2v_[var_edges_[i]];
      for (auto i = var_start_[c]; i < var_start_[c + 1]; ++i) {
        const auto e = var_edges_[i];
        v2c_[e] = clamp(total - c2v_[e]);
      }
      res.posterior[c] = clamp(total);
      res.bits[c] = res.posterior[c] < 0.0 ? 1 : 0;
      undecided |= res.posterior[c] == 0.0;
    }

    res.iterations = it;
    res.syndrome_weight = h.syndrome_weight(res.bits);
    if (res.syndrome_weight == 0 && !undecided) {
      res.converged = true;
      break;
    }
  }
  return res;
}

BpResult decode_bp(const LdpcCode& code, std::span<const double> llr, int max_iters)
{
  BpDecoder dec(code);
  return dec.decode(llr, max_iters);
}

} // namespace chanmatch::ldpc
