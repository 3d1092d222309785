#include "g2lab/stream.hpp"

#include <algorithm>

namespace g2lab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "E_INVALID_ARGUMENT";
    case ErrorCode::overflow: return "E_OVERFLOW";
    case ErrorCode::duration_mismatch: return "E_DURATION_MISMATCH";
    case ErrorCode::geometry_mismatch: return "E_GEOMETRY_MISMATCH";
    case ErrorCode::degenerate: return "E_DEGENERATE";
    case ErrorCode::corrupt_file: return "E_CORRUPT_FILE";
    case ErrorCode::io: return "E_IO";
    case ErrorCode::config: return "E_CONFIG";
  }
  return "E_UNKNOWN";
}

std::string describe(const StreamViolation& v) {
  const auto at = " at index " + std::to_string(v.index);
  switch (v.kind) {
    case ViolationKind::not_increasing: return "events not strictly increasing" + at;
    case ViolationKind::beyond_duration: return "event not below stream duration" + at;
    case ViolationKind::provenance_size: return "provenance length differs from event count";
    case ViolationKind::spacing: return "click spacing shorter than dead time" + at;
  }
  return "unknown violation";
}

std::optional<StreamViolation> validate_stream(std::span<const Tick> events, Tick duration) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i > 0 && events[i] <= events[i - 1])
      return StreamViolation{i, ViolationKind::not_increasing};
    if (events[i] >= duration) return StreamViolation{i, ViolationKind::beyond_duration};
  }
  return std::nullopt;
}

std::optional<StreamViolation> validate_stream(const PhotonStream& s) {
  return validate_stream(s.events, s.duration);
}

std::optional<StreamViolation> validate_stream(const ClickStream& s) {
  if (s.provenance.size() != s.events.size())
    return StreamViolation{0, ViolationKind::provenance_size};
  return validate_stream(s.events, s.duration);
}

namespace {

void require_same_duration(Tick a, Tick b) {
  if (a != b)
    fail(ErrorCode::duration_mismatch,
         "cannot merge streams of durations " + std::to_string(a.value()) + " and " +
             std::to_string(b.value()) + " ps");
}

}  // namespace

PhotonStream merge_streams(const PhotonStream& a, const PhotonStream& b) {
  require_same_duration(a.duration, b.duration);
  PhotonStream out{{}, a.duration, a.label};
  out.events.resize(a.events.size() + b.events.size());
  // std::merge is stable: on ties the element of the first range comes first.
  std::merge(a.events.begin(), a.events.end(), b.events.begin(), b.events.end(),
             out.events.begin());
  return out;
}

ClickStream merge_streams(const ClickStream& a, const ClickStream& b) {
  require_same_duration(a.duration, b.duration);
  ClickStream out;
  out.duration = a.duration;
  out.detector_id = a.detector_id;
  out.events.reserve(a.events.size() + b.events.size());
  out.provenance.reserve(a.events.size() + b.events.size());
  std::size_t i = 0, j = 0;
  while (i < a.events.size() || j < b.events.size()) {
    const bool take_a =
        j == b.events.size() || (i < a.events.size() && a.events[i] <= b.events[j]);
    if (take_a) {
      out.events.push_back(a.events[i]);
      out.provenance.push_back(a.provenance[i]);
      ++i;
    } else {
      out.events.push_back(b.events[j]);
      out.provenance.push_back(b.provenance[j]);
      ++j;
    }
  }
  return out;
}

void resolve_collisions(std::vector<Tick>& events, Tick duration,
                        std::vector<ClickOrigin>* tags) {
  std::size_t kept = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    Tick t = events[i];
    if (kept > 0 && t <= events[kept - 1]) t = events[kept - 1] + Tick(1);
    if (t >= duration) continue;
    events[kept] = t;
    if (tags) (*tags)[kept] = (*tags)[i];
    ++kept;
  }
  events.resize(kept);
  if (tags) tags->resize(kept);
}

PhotonStream shifted(PhotonStream s, Tick offset, Tick new_duration) {
  for (auto& t : s.events) t = t + offset;
  s.duration = new_duration;
  return s;
}

PhotonStream concat_segments(std::span<const PhotonStream> segments, std::string label) {
  PhotonStream out{{}, Tick(0), std::move(label)};
  std::size_t total = 0;
  for (const auto& seg : segments) total += seg.events.size();
  out.events.reserve(total);
  for (const auto& seg : segments) {
    for (Tick t : seg.events) out.events.push_back(t + out.duration);
    out.duration += seg.duration;
  }
  return out;
}

double event_rate(std::size_t n_events, Tick duration) {
  if (duration.value() == 0) return 0.0;
  return static_cast<double>(n_events) / to_seconds(duration);
}

}  // namespace g2lab
