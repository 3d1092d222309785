#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2lab/time.hpp"

namespace g2lab {

/// Emission timestamps of an ideal photon source.
/// Invariants (checked by validate_stream): events strictly increasing and
/// every event < duration.
struct PhotonStream {
  std::vector<Tick> events;
  Tick duration;
  std::string label;

  friend bool operator==(const PhotonStream&, const PhotonStream&) = default;
};

enum class ClickOrigin : std::uint8_t { photon = 0, dark = 1, afterpulse = 2 };

/// Detector output. provenance[i] tags events[i].
struct ClickStream {
  std::vector<Tick> events;
  std::vector<ClickOrigin> provenance;
  Tick duration;
  std::uint8_t detector_id = 0;

  friend bool operator==(const ClickStream&, const ClickStream&) = default;
};

enum class ViolationKind { not_increasing, beyond_duration, provenance_size, spacing };

struct StreamViolation {
  std::size_t index = 0;
  ViolationKind kind = ViolationKind::not_increasing;

  friend bool operator==(const StreamViolation&, const StreamViolation&) = default;
};

std::string describe(const StreamViolation& v);

/// Returns the first violation of monotonicity or the duration bound, or
/// nullopt when the stream is well formed.
std::optional<StreamViolation> validate_stream(std::span<const Tick> events, Tick duration);
std::optional<StreamViolation> validate_stream(const PhotonStream& s);
std::optional<StreamViolation> validate_stream(const ClickStream& s);

/// Sorted union. Equal ticks are both kept, the event from `a` first.
/// Throws ErrorCode::duration_mismatch when durations differ.
PhotonStream merge_streams(const PhotonStream& a, const PhotonStream& b);
ClickStream merge_streams(const ClickStream& a, const ClickStream& b);

/// Makes a sorted sequence strictly increasing by moving each event that is
/// not after its predecessor to predecessor + 1 tick. Events pushed to or past
/// `duration` are removed, together with their entry in `tags` when given.
void resolve_collisions(std::vector<Tick>& events, Tick duration,
                        std::vector<ClickOrigin>* tags = nullptr);

/// Moves every event by `offset` (used to place locally simulated segments on
/// the global time axis).
PhotonStream shifted(PhotonStream s, Tick offset, Tick new_duration);

/// Concatenates consecutive segments. Segment k covers
/// [sum of previous durations, + its own duration) on the global axis; its
/// events are given in local time.
PhotonStream concat_segments(std::span<const PhotonStream> segments, std::string label);

/// Events per second over the stream duration (0 for zero duration).
double event_rate(std::size_t n_events, Tick duration);

}  // namespace g2lab
