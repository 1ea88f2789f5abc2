#pragma once

#include <cmath>

namespace chanmatch {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w * 1e3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// Fiber loss given in dB/km converted to the power attenuation rate in 1/km.
inline double db_per_km_to_neper(double db_per_km) { return db_per_km * std::log(10.0) / 10.0; }

} // namespace chanmatch
