#pragma once

#include "chanmatch/constellation.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace chanmatch {

struct ComplexDump {
  std::vector<cplx> samples;
  double sample_rate = 0.0;
};

/// Interleaved little-endian float64 (re, im) pairs in `path`, plus a text
/// sidecar `path` + ".txt":
///
///   format complex128-le-interleaved
///   sample_rate_hz <value>
///   length <count>
///
/// Symbol dumps use the symbol rate as sample rate. Throws io_error.
void write_complex_dump(const std::filesystem::path& path, std::span<const cplx> samples, double sample_rate);
ComplexDump read_complex_dump(const std::filesystem::path& path);

} // namespace chanmatch
