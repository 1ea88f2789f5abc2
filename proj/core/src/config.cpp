#include "chanmatch/config.hpp"

#include "chanmatch/error.hpp"
#include "chanmatch/units.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace chanmatch {

using json = nlohmann::json;

namespace {

template <class T>
void take(const json& j, const char* key, T& dst)
{
  if (!j.contains(key))
    return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw config_error(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void take(const json& j, const char* key, std::optional<T>& dst)
{
  if (!j.contains(key) || j.at(key).is_null())
    return;
  T v{};
  take(j, key, v);
  dst = v;
}

const std::set<std::string>& known_keys()
{
  static const std::set<std::string> keys{
      "p_min_dbm",       "p_max_dbm",          "p_step_db",
      "p_opt_dbm",       "sigma2_ase_w",       "kappa_per_w2",
      "epsilon",         "ldpc_n",             "ldpc_rate",
      "ldpc_seed",       "ldpc_alist",         "strategy",
      "r1",              "r2",                 "blocks",
      "seed",            "estimate_structure", "nu_min",
      "target_ber",      "workers",            "ssfm_n_spans",
      "ssfm_n_channels", "ssfm_n_symbols",     "ssfm_samples_per_symbol",
      "ssfm_step_tolerance", "ssfm_ase",       "ssfm_full_scale",
      "calibration_powers_dbm", "mi_source",   "mi_samples"};
  return keys;
}

} // namespace

void ExperimentConfig::validate() const
{
  if (!(p_step_db > 0.0) || !(p_max_dbm >= p_min_dbm))
    throw config_error("config: power grid needs p_max_dbm >= p_min_dbm and p_step_db > 0");
  if (sigma2_ase_w && !(*sigma2_ase_w > 0.0))
    throw config_error("config: sigma2_ase_w must be positive");
  if (kappa_per_w2 && !(*kappa_per_w2 >= 0.0))
    throw config_error("config: kappa_per_w2 must be non-negative");
  if (!(epsilon >= 0.0))
    throw config_error("config: epsilon must be non-negative");
  if (!(ldpc_rate > 0.0 && ldpc_rate < 1.0))
    throw config_error("config: ldpc_rate must lie in (0, 1)");
  parse_strategy(strategy);
  parse_structure(estimate_structure);
  if (r1 < 1 || r2 < 0)
    throw config_error("config: r1 >= 1 and r2 >= 0 required");
  if (blocks == 0)
    throw config_error("config: blocks must be at least 1");
  if (!(nu_min > 0.0))
    throw config_error("config: nu_min must be positive");
  if (!(target_ber > 0.0 && target_ber < 1.0))
    throw config_error("config: target_ber must lie in (0, 1)");
  if (mi_source != "surrogate" && mi_source != "ssfm")
    throw config_error("config: mi_source must be 'surrogate' or 'ssfm'");
  if (mi_samples < 10000)
    throw config_error("config: mi_samples must be at least 1e4");
  if (!(ssfm_step_tolerance > 0.0))
    throw config_error("config: ssfm_step_tolerance must be positive");
  fiber().validate();
}

std::vector<double> make_power_grid(double lo, double hi, double step)
{
  if (!(step > 0.0) || hi < lo)
    throw config_error("power grid: invalid bounds or step");
  std::vector<double> g;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  g.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    g.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  return g;
}

std::vector<double> ExperimentConfig::power_grid() const { return make_power_grid(p_min_dbm, p_max_dbm, p_step_db); }

ssfm::FiberSystemParams ExperimentConfig::fiber() const
{
  if (ssfm_full_scale) {
    auto p = ssfm::FiberSystemParams::full_scale();
    p.samples_per_symbol = ssfm_samples_per_symbol;
    return p;
  }
  auto p = ssfm::FiberSystemParams::desk_scale();
  p.n_spans = ssfm_n_spans;
  p.n_channels = ssfm_n_channels;
  p.n_symbols = ssfm_n_symbols;
  p.samples_per_symbol = ssfm_samples_per_symbol;
  return p;
}

NlinParams ExperimentConfig::noise_law() const
{
  NlinParams law;
  law.sigma2_ase = sigma2_ase_w ? *sigma2_ase_w : ssfm::ase_symbol_variance(ssfm::FiberSystemParams::full_scale());
  law.kappa = kappa_per_w2 ? *kappa_per_w2 : calibrate_kappa(law.sigma2_ase, dbm_to_watt(p_opt_dbm));
  law.epsilon = epsilon;
  law.validate();
  return law;
}

ExperimentConfig parse_config(std::string_view json_text)
{
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw config_error("config: top level must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known_keys().contains(key))
      throw config_error("config: unknown key '" + key + "'");

  ExperimentConfig c;
  take(j, "p_min_dbm", c.p_min_dbm);
  take(j, "p_max_dbm", c.p_max_dbm);
  take(j, "p_step_db", c.p_step_db);
  take(j, "p_opt_dbm", c.p_opt_dbm);
  take(j, "sigma2_ase_w", c.sigma2_ase_w);
  take(j, "kappa_per_w2", c.kappa_per_w2);
  take(j, "epsilon", c.epsilon);
  take(j, "ldpc_n", c.ldpc_n);
  take(j, "ldpc_rate", c.ldpc_rate);
  take(j, "ldpc_seed", c.ldpc_seed);
  take(j, "ldpc_alist", c.ldpc_alist);
  take(j, "strategy", c.strategy);
  take(j, "r1", c.r1);
  take(j, "r2", c.r2);
  take(j, "blocks", c.blocks);
  take(j, "seed", c.seed);
  take(j, "estimate_structure", c.estimate_structure);
  take(j, "nu_min", c.nu_min);
  take(j, "target_ber", c.target_ber);
  take(j, "workers", c.workers);
  take(j, "ssfm_n_spans", c.ssfm_n_spans);
  take(j, "ssfm_n_channels", c.ssfm_n_channels);
  take(j, "ssfm_n_symbols", c.ssfm_n_symbols);
  take(j, "ssfm_samples_per_symbol", c.ssfm_samples_per_symbol);
  take(j, "ssfm_step_tolerance", c.ssfm_step_tolerance);
  take(j, "ssfm_ase", c.ssfm_ase);
  take(j, "ssfm_full_scale", c.ssfm_full_scale);
  take(j, "calibration_powers_dbm", c.calibration_powers_dbm);
  take(j, "mi_source", c.mi_source);
  take(j, "mi_samples", c.mi_samples);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
  std::ifstream is(path);
  if (!is)
    throw io_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c, int indent)
{
  json j;
  j["p_min_dbm"] = c.p_min_dbm;
  j["p_max_dbm"] = c.p_max_dbm;
  j["p_step_db"] = c.p_step_db;
  j["p_opt_dbm"] = c.p_opt_dbm;
  j["sigma2_ase_w"] = c.sigma2_ase_w ? json(*c.sigma2_ase_w) : json(nullptr);
  j["kappa_per_w2"] = c.kappa_per_w2 ? json(*c.kappa_per_w2) : json(nullptr);
  j["epsilon"] = c.epsilon;
  j["ldpc_n"] = c.ldpc_n;
  j["ldpc_rate"] = c.ldpc_rate;
  j["ldpc_seed"] = c.ldpc_seed;
  j["ldpc_alist"] = c.ldpc_alist ? json(*c.ldpc_alist) : json(nullptr);
  j["strategy"] = c.strategy;
  j["r1"] = c.r1;
  j["r2"] = c.r2;
  j["blocks"] = c.blocks;
  j["seed"] = c.seed;
  j["estimate_structure"] = c.estimate_structure;
  j["nu_min"] = c.nu_min;
  j["target_ber"] = c.target_ber;
  j["workers"] = c.workers;
  j["ssfm_n_spans"] = c.ssfm_n_spans;
  j["ssfm_n_channels"] = c.ssfm_n_channels;
  j["ssfm_n_symbols"] = c.ssfm_n_symbols;
  j["ssfm_samples_per_symbol"] = c.ssfm_samples_per_symbol;
  j["ssfm_step_tolerance"] = c.ssfm_step_tolerance;
  j["ssfm_ase"] = c.ssfm_ase;
  j["ssfm_full_scale"] = c.ssfm_full_scale;
  j["calibration_powers_dbm"] = c.calibration_powers_dbm;
  j["mi_source"] = c.mi_source;
  j["mi_samples"] = c.mi_samples;
  return j.dump(indent);
}

} // namespace chanmatch
