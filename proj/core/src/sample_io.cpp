#include "chanmatch/sample_io.hpp"

#include "chanmatch/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace chanmatch {

namespace {

std::filesystem::path sidecar(const std::filesystem::path& p)
{
  auto s = p;
  s += ".txt";
  return s;
}

std::uint64_t to_le(std::uint64_t v)
{
  if constexpr (std::endian::native == std::endian::big)
    return __builtin_bswap64(v);
  return v;
}

} // namespace

void write_complex_dump(const std::filesystem::path& path, std::span<const cplx> samples, double sample_rate)
{
  std::ofstream bin(path, std::ios::binary);
  if (!bin)
    throw io_error("cannot open " + path.string() + " for writing");
  for (const auto& s : samples) {
    for (double part : {s.real(), s.imag()}) {
      const auto raw = to_le(std::bit_cast<std::uint64_t>(part));
      bin.write(reinterpret_cast<const char*>(&raw), sizeof raw);
    }
  }
  if (!bin)
    throw io_error("write failed: " + path.string());

  std::ofstream txt(sidecar(path));
  if (!txt)
    throw io_error("cannot open " + sidecar(path).string() + " for writing");
  txt << "format complex128-le-interleaved\n";
  txt << "sample_rate_hz " << std::setprecision(17) << sample_rate << "\n";
  txt << "length " << samples.size() << "\n";
  if (!txt)
    throw io_error("write failed: " + sidecar(path).string());
}

ComplexDump read_complex_dump(const std::filesystem::path& path)
{
  std::ifstream txt(sidecar(path));
  if (!txt)
    throw io_error("cannot open " + sidecar(path).string());
  ComplexDump out;
  std::size_t length = 0;
  bool have_rate = false, have_len = false;
  std::string key;
  while (txt >> key) {
    if (key == "format") {
      std::string fmt;
      txt >> fmt;
      if (fmt != "complex128-le-interleaved")
        throw io_error(sidecar(path).string() + ": unsupported format '" + fmt + "'");
    } else if (key == "sample_rate_hz") {
      txt >> out.sample_rate;
      have_rate = true;
    } else if (key == "length") {
      txt >> length;
      have_len = true;
    } else {
      throw io_error(sidecar(path).string() + ": unknown key '" + key + "'");
    }
  }
  if (!have_rate || !have_len)
    throw io_error(sidecar(path).string() + ": missing sample_rate_hz or length");

  std::ifstream bin(path, std::ios::binary);
  if (!bin)
    throw io_error("cannot open " + path.string());
  out.samples.resize(length);
  for (auto& s : out.samples) {
    std::uint64_t raw[2];
    bin.read(reinterpret_cast<char*>(raw), sizeof raw);
    if (!bin)
      throw io_error(path.string() + ": truncated sample data");
    s = cplx(std::bit_cast<double>(to_le(raw[0])), std::bit_cast<double>(to_le(raw[1])));
  }
  if (bin.peek() != std::char_traits<char>::eof())
    throw io_error(path.string() + ": trailing data beyond declared length");
  return out;
}

} // namespace chanmatch
