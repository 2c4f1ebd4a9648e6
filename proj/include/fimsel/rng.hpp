#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace fimsel {

// Deterministic stream derivation. Every randomized component owns a named
// stream split from the master seed, so adding or reordering one consumer
// never perturbs another's draws.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view name) {
  return derive_seed(base, hash_str(name));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view name,
                                 std::uint64_t index) {
  return derive_seed(derive_seed(base, name), index);
}

// Uniform draw in (0, 1]; strictly positive so log() below is safe.
inline double uniform_unit(std::mt19937_64& eng) {
  return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
}

// Box-Muller without the cached second value: consumption per draw is fixed,
// which keeps streams reproducible independent of call interleaving.
inline double gaussian(std::mt19937_64& eng) {
  const double u1 = uniform_unit(eng);
  const double u2 = uniform_unit(eng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

inline Eigen::VectorXd gaussian_vector(std::mt19937_64& eng, int n) {
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = gaussian(eng);
  return z;
}

}  // namespace fimsel
