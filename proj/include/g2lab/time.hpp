#pragma once

#include <compare>
#include <cstdint>
#include <limits>

#include "g2lab/error.hpp"

namespace g2lab {

/// Absolute time since experiment start, in integer picoseconds.
/// Arithmetic is checked: results that would wrap throw ErrorCode::overflow.
class Tick {
 public:
  constexpr Tick() = default;
  constexpr explicit Tick(std::uint64_t ps) : value_(ps) {}

  constexpr std::uint64_t value() const noexcept { return value_; }

  static constexpr Tick max() noexcept {
    return Tick(std::numeric_limits<std::uint64_t>::max());
  }

  friend constexpr auto operator<=>(Tick, Tick) = default;

  friend Tick operator+(Tick a, Tick b) {
    std::uint64_t out = 0;
    if (__builtin_add_overflow(a.value_, b.value_, &out))
      fail(ErrorCode::overflow, "tick addition overflows 64 bits");
    return Tick(out);
  }
  friend Tick operator-(Tick a, Tick b) {
    if (b.value_ > a.value_)
      fail(ErrorCode::overflow, "tick subtraction underflows below zero");
    return Tick(a.value_ - b.value_);
  }
  friend Tick operator*(Tick a, std::uint64_t k) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a.value_, k, &out))
      fail(ErrorCode::overflow, "tick multiplication overflows 64 bits");
    return Tick(out);
  }
  Tick& operator+=(Tick other) { return *this = *this + other; }

 private:
  std::uint64_t value_ = 0;
};

/// Signed time difference in picoseconds, used for correlation delay axes
/// (cross-correlations are two-sided).
class Delay {
 public:
  constexpr Delay() = default;
  constexpr explicit Delay(std::int64_t ps) : value_(ps) {}

  constexpr std::int64_t value() const noexcept { return value_; }

  friend constexpr auto operator<=>(Delay, Delay) = default;
  friend constexpr Delay operator-(Delay d) { return Delay(-d.value_); }

 private:
  std::int64_t value_ = 0;
};

inline constexpr std::uint64_t kTicksPerNs = 1'000;
inline constexpr std::uint64_t kTicksPerSecond = 1'000'000'000'000;
inline constexpr std::uint32_t kTickFemtoseconds = 1'000;

constexpr Tick ns(std::uint64_t n) { return Tick(n * kTicksPerNs); }
constexpr Delay delay_ns(std::int64_t n) {
  return Delay(n * static_cast<std::int64_t>(kTicksPerNs));
}

/// Rounds a non-negative floating-point duration (seconds) to the nearest tick.
Tick ticks_from_seconds(double seconds);
/// Rounds a floating-point nanosecond value to the nearest tick.
Tick ticks_from_ns(double nanoseconds);
Delay delay_from_ns(double nanoseconds);

constexpr double to_seconds(Tick t) {
  return static_cast<double>(t.value()) / static_cast<double>(kTicksPerSecond);
}
constexpr double to_ns(Delay d) {
  return static_cast<double>(d.value()) / static_cast<double>(kTicksPerNs);
}
constexpr double to_ns(Tick t) {
  return static_cast<double>(t.value()) / static_cast<double>(kTicksPerNs);
}

}  // namespace g2lab
