#pragma once

#include <cstdint>
#include <random>

namespace chanmatch {

using rng_stream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (seed, a, b). Used so every Monte Carlo block owns a
// stream that does not depend on scheduling order.
inline rng_stream derive_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0)
{
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(a + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(b + 0x85157af5ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return rng_stream(seq);
}

} // namespace chanmatch
