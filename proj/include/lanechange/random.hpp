#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <type_traits>

namespace lanechange {

using Rng = std::mt19937_64;

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

namespace seeding {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ splitmix64(v));
}

}  // namespace seeding

/// Stable stream seed from a master seed and a list of labels; independent of
/// platform hashing and of the order in which streams are requested.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t master, const Parts&... parts) {
  std::uint64_t h = seeding::splitmix64(master);
  auto mix = [&h](const auto& p) {
    using P = std::decay_t<decltype(p)>;
    if constexpr (std::is_convertible_v<P, std::string_view>) {
      h = seeding::combine(h, seeding::fnv1a(std::string_view(p)));
    } else if constexpr (std::is_floating_point_v<P>) {
      // Round to micro-units so 4 and 4.0 produce the same stream.
      h = seeding::combine(
          h, static_cast<std::uint64_t>(static_cast<std::int64_t>(p * 1e6)));
    } else {
      h = seeding::combine(h, static_cast<std::uint64_t>(p));
    }
  };
  (mix(parts), ...);
  return h;
}

}  // namespace lanechange
