#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "g2lab/random.hpp"
#include "g2lab/stream.hpp"

namespace g2lab {

struct AfterpulseWindow {
  Tick min;
  Tick max;

  friend bool operator==(const AfterpulseWindow&, const AfterpulseWindow&) = default;
};

struct DetectorParams {
  double efficiency = 1.0;
  Tick dead_time;
  double dark_rate_hz = 0.0;
  Tick jitter_fwhm;
  double afterpulse_prob = 0.0;
  AfterpulseWindow afterpulse_delay;

  /// Throws ErrorCode::invalid_argument on out-of-range values or an
  /// afterpulse window that starts inside the dead time.
  void validate() const;

  /// Ideal detector: every photon becomes a click at its exact time.
  static DetectorParams ideal();
  /// Actively quenched APD: 30 ns dead time, 0.5 % afterpulsing in [30, 50] ns.
  static DetectorParams apd_paper();
  /// Superconducting nanowire detector: 10 % efficiency, 5 ns dead time,
  /// 50 /s dark counts, 100 ps FWHM jitter, no afterpulsing.
  static DetectorParams sspd_paper();

  friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

/// Resolves "apd-paper", "sspd-paper" and "ideal"; nullopt otherwise.
std::optional<DetectorParams> detector_preset(std::string_view name);

/// Each photon goes to the first output with probability `transmittance`.
std::pair<PhotonStream, PhotonStream> beam_splitter(const PhotonStream& s, double transmittance,
                                                    RngSeed seed);

/// Keeps each photon independently with probability `keep`.
PhotonStream bernoulli_thin(const PhotonStream& s, double keep, RngSeed seed);

/// Non-paralyzable dead time: keep an event iff it is at least `dead_time`
/// after the last kept event.
std::vector<Tick> apply_dead_time(std::span<const Tick> events, Tick dead_time);

/// Full detection chain, in fixed order: efficiency thinning, dark counts,
/// Gaussian jitter (sigma = FWHM / 2.3548) with collision bumping, then a
/// single sweep applying dead time to photon/dark candidates and to
/// afterpulses spawned by kept clicks. Jittered events landing at or past the
/// duration are dropped; below zero they clamp to tick 0.
ClickStream detect(const PhotonStream& s, const DetectorParams& p, RngSeed seed,
                   std::uint8_t detector_id = 0);

/// Checks stream invariants and that consecutive clicks are >= dead_time apart.
std::optional<StreamViolation> validate_clicks(const ClickStream& c, const DetectorParams& p);

}  // namespace g2lab
