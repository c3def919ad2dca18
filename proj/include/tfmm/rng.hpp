#pragma once

#include <cstdint>
#include <random>

#include "tfmm/types.hpp"

namespace tfmm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Splittable seeding: (seed, stream) pairs map to decorrelated engine seeds, so
// Monte-Carlo runs can be farmed out across threads while staying reproducible.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(0x5851f42d4c957f2dull + stream));
}

template <typename Scalar = double>
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(derive_stream_seed(seed, stream)) {}

  Scalar uniform() { return std::uniform_real_distribution<Scalar>(0, 1)(engine_); }

  Scalar gaussian() { return normal_(engine_); }

  Scalar gamma(Scalar shape, Scalar scale) {
    return std::gamma_distribution<Scalar>(shape, scale)(engine_);
  }

  Scalar chi_square(Scalar dof) { return gamma(dof / Scalar(2), Scalar(2)); }

  // Student-t via the Gaussian / chi-square ratio representation.
  Scalar student_t(Scalar sigma, Scalar nu) {
    return sigma * gaussian() / std::sqrt(chi_square(nu) / nu);
  }

  VectorX<Scalar> gaussian_vector(Index n) {
    VectorX<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<Scalar> normal_{0, 1};
};

}  // namespace tfmm
