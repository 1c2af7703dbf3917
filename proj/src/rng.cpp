#include "lqmfg/rng.hpp"

#include <cmath>
#include <numbers>

namespace lqmfg {
namespace {

// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::word(std::uint64_t replication, std::uint64_t player,
                               std::uint64_t counter,
                               std::uint64_t lane) const {
  std::uint64_t h = mix(seed_ ^ 0x6c62272e07bb0142ULL);
  h = mix(h ^ replication);
  h = mix(h ^ player);
  h = mix(h ^ counter);
  h = mix(h ^ lane);
  return h;
}

double CounterRng::uniform(std::uint64_t replication, std::uint64_t player,
                           std::uint64_t counter, std::uint64_t lane) const {
  const std::uint64_t w = word(replication, player, counter, lane);
  // 53 uniform bits mapped to (0, 1]; never zero, so log() below is safe.
  return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t replication, std::uint64_t player,
                          std::uint64_t counter) const {
  const double u1 = uniform(replication, player, counter, 0);
  const double u2 = uniform(replication, player, counter, 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace lqmfg
