#pragma once

#include <cstdint>
#include <initializer_list>

namespace cvna {

/// SplitMix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a path of
/// counters, e.g. derive_seed(master, {instance, realization}). Distinct
/// paths give unrelated seeds; the same path always gives the same seed.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t state = splitmix64(master);
  for (std::uint64_t step : path) state = splitmix64(state ^ splitmix64(step + 0x632BE59BD9B4E019ULL));
  return state;
}

}  // namespace cvna
