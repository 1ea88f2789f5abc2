#include "chanmatch/harness.hpp"

#include "chanmatch/error.hpp"
#include "chanmatch/mlc.hpp"
#include "chanmatch/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#ifndef CHANMATCH_VERSION
#define CHANMATCH_VERSION "0.0.0"
#endif

namespace chanmatch {

using json = nlohmann::json;

const char* library_version() { return CHANMATCH_VERSION; }

Link make_link(const ExperimentConfig& cfg)
{
  Link link{build_16qam(), cfg.ldpc_alist ? ldpc::LdpcCode::from_matrix(ldpc::read_alist(*cfg.ldpc_alist))
                                          : ldpc::construct_code(cfg.ldpc_n, cfg.ldpc_rate, cfg.ldpc_seed),
            cfg.noise_law()};
  return link;
}

DecoderConfig make_decoder_config(const ExperimentConfig& cfg, const NlinParams& params)
{
  DecoderConfig d;
  d.strategy = parse_strategy(cfg.strategy);
  d.r1 = cfg.r1;
  d.r2 = cfg.r2;
  d.estimate_structure = parse_structure(cfg.estimate_structure);
  d.nominal = make_nominal(params, dbm_to_watt(cfg.p_opt_dbm), d.estimate_structure);
  d.nu_min = cfg.nu_min;
  return d;
}

namespace {

struct BlockTally {
  std::uint64_t errors = 0;
  std::uint64_t level0_errors = 0;
  int passes = 0;
  int bp_iterations = 0;
  bool block_error = false;
};

void draw_bits(std::vector<bit>& out, rng_stream& rng)
{
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t w = rng();
    for (int b = 0; b < 64 && i < out.size(); ++b, ++i, w >>= 1)
      out[i] = static_cast<bit>(w & 1u);
  }
}

std::size_t resolve_workers(std::size_t requested, std::size_t jobs)
{
  std::size_t w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, jobs));
}

} // namespace

BerRecord run_point(const Link& link, const DecoderConfig& cfg, double p_dbm, std::size_t n_blocks,
                    std::uint64_t seed, std::size_t workers)
{
  if (n_blocks == 0)
    throw config_error("run_point: n_blocks must be at least 1");
  cfg.validate();
  link.params.validate();

  const double p_true = dbm_to_watt(p_dbm);
  const ChannelState state{p_true, link.code.n()};
  const auto genie = make_nominal(link.params, p_true, cfg.estimate_structure);
  const std::size_t info_len = mlc_info_length(link.code);

  std::vector<BlockTally> tallies(n_blocks);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    TurboDecoder decoder(link.code, link.qam);
    std::vector<bit> info(info_len);
    for (std::size_t b = next++; b < n_blocks; b = next++) {
      auto rng = derive_stream(seed, 0, b);
      draw_bits(info, rng);
      const auto frame = mlc_encode(info, link.code, link.qam);
      const auto y = transmit(frame.symbols, state, link.params, rng);
      const auto res = decoder.decode(y, cfg, genie);
      BlockTally t;
      for (std::size_t i = 0; i < info_len; ++i)
        t.errors += (res.info_bits[i] != info[i]);
      for (std::size_t i = 0; i < link.code.k(); ++i)
        t.level0_errors += (res.info_bits[i] != info[i]);
      t.passes = res.passes;
      t.bp_iterations = res.bp_iterations;
      t.block_error = t.errors > 0;
      tallies[b] = t;
    }
  };

  const auto n_threads = resolve_workers(workers, n_blocks);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back(worker);
  }

  BerRecord rec;
  rec.power_dbm = p_dbm;
  rec.strategy = cfg.strategy;
  rec.r1 = cfg.r1;
  rec.r2 = cfg.r2;
  rec.blocks = n_blocks;
  rec.bits = static_cast<std::uint64_t>(n_blocks) * info_len;
  rec.seed = seed;
  rec.level0_bits = static_cast<std::uint64_t>(n_blocks) * link.code.k();
  std::uint64_t passes = 0, iters = 0;
  for (const auto& t : tallies) {
    rec.errors += t.errors;
    rec.level0_errors += t.level0_errors;
    rec.block_errors += t.block_error;
    passes += static_cast<std::uint64_t>(t.passes);
    iters += static_cast<std::uint64_t>(t.bp_iterations);
  }
  rec.ber = static_cast<double>(rec.errors) / static_cast<double>(rec.bits);
  rec.mean_passes = static_cast<double>(passes) / static_cast<double>(n_blocks);
  rec.mean_bp_iterations = static_cast<double>(iters) / static_cast<double>(n_blocks);
  return rec;
}

std::vector<BerRecord> sweep(const Link& link, const DecoderConfig& cfg, std::span<const double> grid_dbm,
                             std::size_t n_blocks, std::uint64_t seed, std::size_t workers)
{
  if (!std::is_sorted(grid_dbm.begin(), grid_dbm.end()))
    throw config_error("sweep: power grid must be sorted ascending");
  std::vector<BerRecord> out;
  out.reserve(grid_dbm.size());
  for (std::size_t i = 0; i < grid_dbm.size(); ++i)
    out.push_back(run_point(link, cfg, grid_dbm[i], n_blocks, seed + i, workers));
  return out;
}

SurvivabilityReport survivability(std::span<const BerRecord> records, double target)
{
  if (records.size() < 2)
    throw config_error("survivability: at least two records are required");
  if (!(target > 0.0 && target < 1.0))
    throw config_error("survivability: target must lie in (0, 1)");
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].power_dbm < records[i - 1].power_dbm)
      throw config_error("survivability: records must be sorted by power");

  SurvivabilityReport rep;
  rep.target_ber = target;

  auto log_ber = [&rep](const BerRecord& r) {
    if (r.errors == 0) {
      rep.floor_applied = true;
      return std::log10(0.5 / static_cast<double>(std::max<std::uint64_t>(r.bits, 1)));
    }
    return std::log10(r.ber);
  };
  auto crossing = [&](const BerRecord& above, const BerRecord& below) {
    const double la = log_ber(above), lb = log_ber(below), lt = std::log10(target);
    if (la == lb)
      return 0.5 * (above.power_dbm + below.power_dbm);
    return above.power_dbm + (lt - la) * (below.power_dbm - above.power_dbm) / (lb - la);
  };

  const std::size_t n = records.size();
  for (std::size_t i = 0; i < n;) {
    if (records[i].ber > target) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && records[j + 1].ber <= target)
      ++j;

    const bool lo_cens = i == 0;
    const bool hi_cens = j + 1 == n;
    const double lo = lo_cens ? records[i].power_dbm : crossing(records[i - 1], records[i]);
    const double hi = hi_cens ? records[j].power_dbm : crossing(records[j + 1], records[j]);
    if (!rep.found || hi - lo > rep.width_db) {
      rep.found = true;
      rep.p_lo_dbm = lo;
      rep.p_hi_dbm = hi;
      rep.width_db = hi - lo;
      rep.lo_censored = lo_cens;
      rep.hi_censored = hi_cens;
    }
    i = j + 1;
  }
  return rep;
}

namespace {

std::string format(const char* fmt, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

constexpr const char* csv_header = "power_dbm,strategy,r1,r2,blocks,bits,errors,ber,mean_passes,seed";

} // namespace

std::string records_to_csv(std::span<const BerRecord> records)
{
  std::ostringstream os;
  os << csv_header << '\n';
  for (const auto& r : records) {
    os << format("%.4f", r.power_dbm) << ',' << to_string(r.strategy) << ',' << r.r1 << ',' << r.r2 << ','
       << r.blocks << ',' << r.bits << ',' << r.errors << ',' << format("%.6e", r.ber) << ','
       << format("%.4f", r.mean_passes) << ',' << r.seed << '\n';
  }
  return os.str();
}

std::vector<BerRecord> parse_csv(const std::string& text)
{
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != csv_header)
    throw config_error("BER CSV: missing or unexpected header");
  std::vector<BerRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      f.push_back(cell);
    if (f.size() != 10)
      throw config_error("BER CSV line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      BerRecord r;
      r.power_dbm = std::stod(f[0]);
      r.strategy = parse_strategy(f[1]);
      r.r1 = std::stoi(f[2]);
      r.r2 = std::stoi(f[3]);
      r.blocks = std::stoull(f[4]);
      r.bits = std::stoull(f[5]);
      r.errors = std::stoull(f[6]);
      r.ber = std::stod(f[7]);
      r.mean_passes = std::stod(f[8]);
      r.seed = std::stoull(f[9]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw config_error("BER CSV line " + std::to_string(lineno) + ": malformed field");
    }
  }
  return out;
}

std::vector<BerRecord> read_csv(const std::filesystem::path& path)
{
  std::ifstream is(path);
  if (!is)
    throw io_error("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_csv(ss.str());
}

namespace {

json report_json(const SurvivabilityReport& r)
{
  json j;
  j["target_ber"] = r.target_ber;
  j["found"] = r.found;
  j["p_lo_dbm"] = r.p_lo_dbm;
  j["p_hi_dbm"] = r.p_hi_dbm;
  j["width_db"] = r.width_db;
  j["lo_censored"] = r.lo_censored;
  j["hi_censored"] = r.hi_censored;
  j["zero_error_floor_applied"] = r.floor_applied;
  j["interpolation"] = "linear in (dBm, log10 BER); zero-error points at 1/(2 bits)";
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw io_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os)
    throw io_error("write failed: " + path.string());
}

} // namespace

std::string report_to_json(const SurvivabilityReport& report, int indent)
{
  return report_json(report).dump(indent);
}

void emit(std::span<const BerRecord> records, const SurvivabilityReport& report, const std::string& config_json,
          const std::filesystem::path& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw io_error("cannot create " + dir.string() + ": " + ec.message());

  write_text(dir / "ber.csv", records_to_csv(records));

  json summary;
  summary["version"] = library_version();
  try {
    summary["config"] = config_json.empty() ? json::object() : json::parse(config_json);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("emit: config echo is not valid JSON: ") + e.what());
  }
  summary["survivability"] = report_json(report);
  summary["points"] = records.size();
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::vector<double> x, y;
  for (const auto& r : records) {
    x.push_back(r.power_dbm);
    y.push_back(r.ber);
  }
  write_columns(dir / "ber.dat", x, y, {"power_dbm ber"});
}

void write_columns(const std::filesystem::path& path, std::span<const double> x, std::span<const double> y,
                   const std::vector<std::string>& header)
{
  if (x.size() != y.size())
    throw config_error("write_columns: column lengths differ");
  std::ostringstream os;
  for (const auto& h : header)
    os << "# " << h << '\n';
  for (std::size_t i = 0; i < x.size(); ++i)
    os << format("%.6f", x[i]) << ' ' << format("%.10e", y[i]) << '\n';
  write_text(path, os.str());
}

} // namespace chanmatch
