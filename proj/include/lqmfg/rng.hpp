#pragma once

#include <cstdint>

namespace lqmfg {

// Stateless counter-based generator. Every draw is a pure function of
// (seed, replication, player, counter, lane), so parallel scheduling cannot
// change the stream any worker sees: identical inputs give identical draws
// no matter how work is split. The word function chains splitmix64
// finalizers over the key fields.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t word(std::uint64_t replication, std::uint64_t player,
                     std::uint64_t counter, std::uint64_t lane) const;

  // Uniform on (0, 1].
  double uniform(std::uint64_t replication, std::uint64_t player,
                 std::uint64_t counter, std::uint64_t lane) const;

  // Standard normal via Box-Muller on lanes 0 and 1 of the key.
  double normal(std::uint64_t replication, std::uint64_t player,
                std::uint64_t counter) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace lqmfg
