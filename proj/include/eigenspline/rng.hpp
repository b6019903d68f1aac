#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace eigenspline {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A generator is a pure function of (key, counter); `stream` occupies the
/// high half of the counter so independent substreams (one per replicate,
/// per method) never overlap and can be consumed in any order or thread.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block bijection(Block counter, std::array<std::uint32_t, 2> key) noexcept;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept;

  /// Next 32 random bits.
  std::uint32_t next_u32() noexcept;
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal draw (Box-Muller, both outputs used).
  double normal() noexcept;
  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
std::vector<int> sample_without_replacement(int n, int k, std::uint64_t seed,
                                            std::uint64_t stream);

}  // namespace eigenspline
