#include "g2lab/time.hpp"

#include <cmath>
#include <string>

namespace g2lab {

namespace {

std::uint64_t round_nonneg(double ps, const char* what) {
  if (!std::isfinite(ps) || ps < 0.0)
    fail(ErrorCode::invalid_argument, std::string(what) + " must be finite and non-negative");
  const double rounded = std::floor(ps + 0.5);
  if (rounded >= 18446744073709551616.0)
    fail(ErrorCode::overflow, std::string(what) + " does not fit in 64-bit ticks");
  return static_cast<std::uint64_t>(rounded);
}

}  // namespace

Tick ticks_from_seconds(double seconds) {
  return Tick(round_nonneg(seconds * static_cast<double>(kTicksPerSecond), "duration"));
}

Tick ticks_from_ns(double nanoseconds) {
  return Tick(round_nonneg(nanoseconds * static_cast<double>(kTicksPerNs), "time"));
}

Delay delay_from_ns(double nanoseconds) {
  const double ps = nanoseconds * static_cast<double>(kTicksPerNs);
  if (!std::isfinite(ps) || std::fabs(ps) >= 9.2e18)
    fail(ErrorCode::overflow, "delay does not fit in 64-bit ticks");
  return Delay(static_cast<std::int64_t>(std::floor(ps + 0.5)));
}

}  // namespace g2lab
