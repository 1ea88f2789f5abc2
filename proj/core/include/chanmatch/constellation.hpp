#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace chanmatch {

using cplx = std::complex<double>;

// Four-bit label of a constellation point. Level 0 is the LDPC-coded level.
struct Label {
  std::uint8_t b0 = 0, b1 = 0, b2 = 0, b3 = 0;

  // Packed value b0 | b1 << 1 | b2 << 2 | b3 << 3; used for tie-breaking.
  constexpr unsigned value() const { return b0 | (b1 << 1) | (b2 << 2) | (b3 << 3); }
  static constexpr Label from_value(unsigned v)
  {
    return {static_cast<std::uint8_t>(v & 1u), static_cast<std::uint8_t>((v >> 1) & 1u),
            static_cast<std::uint8_t>((v >> 2) & 1u), static_cast<std::uint8_t>((v >> 3) & 1u)};
  }
  friend constexpr bool operator==(const Label&, const Label&) = default;
};

/// Unit-energy 16-QAM with a set-partition labeling for multi-level coding.
///
/// Points are (I + jQ)/sqrt(10) with I, Q in {-3, -1, 1, 3}. Writing
/// i = (I + 3)/2 and q = (Q + 3)/2 (both in 0..3), the label bits are
///
///   b0 = (i + q) mod 2              checkerboard, subset distance sqrt(2) d
///   b1 = i mod 2                    subset distance 2 d
///   b2 = (i/2 + q/2) mod 2          subset distance 2 sqrt(2) d
///   b3 = i/2                        last bit within the remaining pair
///
/// where d = 2/sqrt(10) is the minimum distance and "/" is integer division.
/// The point with packed label value v is stored at index v, so points()[v]
/// and map_bits(Label::from_value(v)) coincide.
///
/// Rings by squared magnitude: 0.2 (x4), 1.0 (x8), 1.8 (x4).
class Constellation {
public:
  static constexpr std::size_t size = 16;
  static constexpr std::size_t n_rings = 3;

  const std::array<cplx, size>& points() const { return points_; }
  const std::array<Label, size>& labels() const { return labels_; }
  const std::array<std::uint8_t, size>& ring_index() const { return ring_; }

  cplx map_bits(const Label& b) const { return points_[b.value()]; }
  cplx map_bits(std::uint8_t b0, std::uint8_t b1, std::uint8_t b2, std::uint8_t b3) const
  {
    return map_bits(Label{b0, b1, b2, b3});
  }

  // Index (== packed label) of a point given exactly or within 1e-9.
  std::size_t index_of(cplx x) const;
  Label label_of(cplx x) const { return labels_[index_of(x)]; }

  // Ring of a constellation point, ordered by increasing squared magnitude.
  // Throws config_error for inputs that are not constellation points.
  unsigned ring_of(cplx x) const { return ring_[index_of(x)]; }

  // Squared magnitude of each ring: {0.2, 1.0, 1.8}.
  static constexpr std::array<double, n_rings> ring_energy{0.2, 1.0, 1.8};

  // Minimum distance 2/sqrt(10).
  static double min_distance();

private:
  friend Constellation build_16qam();
  Constellation() = default;

  std::array<cplx, size> points_{};
  std::array<Label, size> labels_{};
  std::array<std::uint8_t, size> ring_{};
};

Constellation build_16qam();

} // namespace chanmatch
