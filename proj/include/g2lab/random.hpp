#pragma once

#include <array>
#include <cstdint>

namespace g2lab {

/// Identifies one reproducible random sequence. Equal (seed, stream_id) pairs
/// produce bit-identical draws; distinct stream_ids are independent.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  /// Derives an independent sub-stream, e.g. one per segment or per pipeline
  /// stage. Deterministic in (stream_id, tag).
  RngSeed child(std::uint64_t tag) const noexcept;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Philox4x32-10 block function (Salmon et al., counter-based).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Sequential view over the counter space of one RngSeed: the key is the seed,
/// the upper counter half is the stream id, the lower half counts blocks.
/// Two Rng objects built from the same seed emit the same sequence.
class Rng {
 public:
  explicit Rng(RngSeed seed) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1); safe as a logarithm argument.
  double uniform_open() noexcept;
  /// Exponential waiting time with the given rate (any unit).
  double exponential(double rate) noexcept;
  /// Standard normal deviate (Box-Muller, one value per call).
  double normal() noexcept;
  /// Uniform integer on [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  PhiloxKey key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  unsigned used_ = 4;
};

}  // namespace g2lab
