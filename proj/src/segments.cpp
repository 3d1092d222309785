#include "g2lab/segments.hpp"

namespace g2lab {

std::size_t SegmentPlan::count() const {
  if (length.value() == 0) fail(ErrorCode::invalid_argument, "segment length must be positive");
  return static_cast<std::size_t>((total.value() + length.value() - 1) / length.value());
}

Tick SegmentPlan::start(std::size_t k) const { return length * k; }

Tick SegmentPlan::duration(std::size_t k) const {
  const Tick begin = start(k);
  return std::min(length, total - begin);
}

}  // namespace g2lab
