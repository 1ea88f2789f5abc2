#include "chanmatch/constellation.hpp"

#include "chanmatch/error.hpp"

#include <cmath>
#include <sstream>

namespace chanmatch {

namespace {
constexpr double point_tolerance = 1e-9;
}

double Constellation::min_distance() { return 2.0 / std::sqrt(10.0); }

std::size_t Constellation::index_of(cplx x) const
{
  for (std::size_t v = 0; v < size; ++v) {
    if (std::abs(points_[v] - x) <= point_tolerance)
      return v;
  }
  std::ostringstream msg;
  msg << "invalid constellation point (" << x.real() << ", " << x.imag() << ")";
  throw config_error(msg.str());
}

Constellation build_16qam()
{
  Constellation c;
  const double scale = 1.0 / std::sqrt(10.0);
  for (unsigned i = 0; i < 4; ++i) {
    for (unsigned q = 0; q < 4; ++q) {
      const Label lab{static_cast<std::uint8_t>((i + q) & 1u), static_cast<std::uint8_t>(i & 1u),
                      static_cast<std::uint8_t>(((i >> 1) + (q >> 1)) & 1u),
                      static_cast<std::uint8_t>(i >> 1)};
      const double re = 2.0 * i - 3.0;
      const double im = 2.0 * q - 3.0;
      const unsigned v = lab.value();
      c.points_[v] = cplx(re * scale, im * scale);
      c.labels_[v] = lab;
      // |I|, |Q| in {1, 3}: ring 0 = (1,1), ring 1 = mixed, ring 2 = (3,3).
      c.ring_[v] = static_cast<std::uint8_t>((std::abs(re) > 2.0) + (std::abs(im) > 2.0));
    }
  }
  return c;
}

} // namespace chanmatch
