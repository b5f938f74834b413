#pragma once
// Counter-based random streams. Every variate is a pure function of
// (master seed, stream id, timestep k, index), so draws can happen in any
// order, on any thread, and still reproduce the sequential run exactly.

#include <cmath>
#include <cstdint>

namespace dpvi {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t k, std::uint64_t idx) {
  std::uint64_t h = mix64(seed ^ (0xd1b54a32d192ed03ull * stream));
  h = mix64(h ^ (0x8cb92ba72f3d8dd7ull * k));
  h = mix64(h ^ (0x2545f4914f6cdd1dull * idx));
  return h;
}

// Uniform on the open interval (0, 1).
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t k,
                        std::uint64_t idx) {
  const std::uint64_t h = counter_hash(seed, stream, k, idx);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform on (-1/2, 1/2).
inline double uniform_centered(std::uint64_t seed, std::uint64_t stream, std::uint64_t k,
                               std::uint64_t idx) {
  return uniform01(seed, stream, k, idx) - 0.5;
}

// Laplace(0, b) by inverse CDF of the centered uniform.
inline double laplace_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t k,
                             std::uint64_t idx, double b) {
  const double u = uniform_centered(seed, stream, k, idx);
  const double s = (u >= 0.0) ? 1.0 : -1.0;
  return -b * s * std::log1p(-2.0 * std::fabs(u));
}

// Standard normal via Box-Muller; consumes uniform indices 2*idx and 2*idx+1.
inline double normal_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t k,
                            std::uint64_t idx) {
  const double u1 = uniform01(seed, stream, k, 2 * idx);
  const double u2 = uniform01(seed, stream, k, 2 * idx + 1);
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Exp(1) by inverse CDF.
inline double exponential_sample(std::uint64_t seed, std::uint64_t stream, std::uint64_t k,
                                 std::uint64_t idx) {
  return -std::log(uniform01(seed, stream, k, idx));
}

}  // namespace dpvi
