#pragma once

#include <cstdint>
#include <random>

namespace vri {

// Streams keep the different noise sources of one path independent.
enum class Stream : std::uint64_t {
  Mortality = 1,
  Asset = 2,
  Claims = 3,
};

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed: depends only on (root, stream, index), never on scheduling.
inline std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index) {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ index);
}

inline Engine make_engine(std::uint64_t root, Stream stream, std::uint64_t index) {
  return Engine(derive_seed(root, stream, index));
}

// Uniform on the open interval (0, 1).
inline double open_uniform(Engine& eng) {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(eng);
    if (u > 0.0) return u;
  }
}

}  // namespace vri
