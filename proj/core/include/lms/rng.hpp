#pragma once

#include <cstdint>
#include <random>

namespace lms {

using Rng = std::mt19937_64;

/// Independent random streams derived from one run seed. Each consumer draws
/// from its own stream so that policies compared on the same seed see
/// identical channel and arrival sequences regardless of how much randomness
/// the policy itself consumes.
enum class Stream : std::uint64_t {
  placement = 1,
  shadowing = 2,
  fading = 3,
  arrivals = 4,
  policy = 5,
  channel_state = 6,
};

namespace detail {
// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Generator keyed by (seed, stream, sub-frame). Keying on the sub-frame makes
/// every sub-frame's draws reproducible without replaying earlier ones.
inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t t = 0) {
  const std::uint64_t key =
      detail::mix64(detail::mix64(detail::mix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ t);
  return Rng(key);
}

}  // namespace lms
