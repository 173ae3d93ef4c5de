#pragma once

#include <cstdint>
#include <vector>

namespace spectrain {

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Counter-based generator: the i-th draw of (seed, stream) is a pure
/// function of (seed, stream, i), so any draw can be reproduced without
/// replaying the ones before it.
///
///   u64(i)     = splitmix64(splitmix64(seed ^ splitmix64(stream)) + i)
///   uniform(i) = (u64(i) >> 11) * 2^-53                  in [0, 1)
///   normal     = Box-Muller on two consecutive uniforms, cosine branch only
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  double normal() noexcept;
  /// Uniform integer in [0, n) by multiply-shift on the top 32 bits.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }
  void seek(std::uint64_t counter) noexcept { counter_ = counter; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates permutation of [0, n) driven by a CounterRng.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed,
                                     std::uint64_t stream);

}  // namespace spectrain
