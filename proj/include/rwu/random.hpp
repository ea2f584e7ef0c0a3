#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace rwu {

// SplitMix64: a tiny 64-bit generator, used both as a hash for deriving
// substream seeds and as the per-site engine of the lazy scenery.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix(z);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Engine used for every replicate-level stream.
using Rng = std::mt19937_64;

// Role tags of the counter-based split. Walk and scenery streams of the
// same replicate never share state.
enum class Role : std::uint64_t {
  walk = 1,
  scenery = 2,
  sheet = 3,
  stable = 4,
  poisson = 5,
  auxiliary = 6,
};

inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return SplitMix64::mix(a ^ SplitMix64::mix(b + 0x632be59bd9b4e019ULL));
}

// Seed of substream (replicate, role) under a master seed.
inline constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t replicate,
                                           Role role) noexcept {
  return hash_combine(hash_combine(master, replicate), static_cast<std::uint64_t>(role));
}

inline Rng make_stream(std::uint64_t master, std::uint64_t replicate, Role role) {
  const std::uint64_t s = stream_seed(master, replicate, role);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(replicate)};
  return Rng(seq);
}

// Uniform on the open interval (0,1); never returns an endpoint.
template <class Engine>
double uniform_open(Engine& eng) {
  for (;;) {
    const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

}  // namespace rwu
