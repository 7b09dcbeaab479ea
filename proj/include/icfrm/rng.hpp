#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace icfrm {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A stream is fully identified by (key, stream, substream): the 128-bit
/// counter is laid out as [block, substream, stream_lo, stream_hi], so the
/// output for replicate m never depends on how replicates are scheduled.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  Philox4x32(std::uint64_t key, std::uint64_t stream, std::uint32_t substream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Raw block function; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// SplitMix64 finaliser applied to (seed, index); derives child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace icfrm
