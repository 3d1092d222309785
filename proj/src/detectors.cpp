#include "g2lab/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "g2lab/emitters.hpp"

namespace g2lab {

namespace {

enum StageTag : std::uint64_t { kThin = 1, kDark = 2, kJitter = 3, kAfterpulse = 4 };

constexpr double kFwhmPerSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

void DetectorParams::validate() const {
  if (!is_probability(efficiency))
    fail(ErrorCode::invalid_argument, "detector efficiency must lie in [0, 1]");
  if (!is_probability(afterpulse_prob))
    fail(ErrorCode::invalid_argument, "afterpulse probability must lie in [0, 1]");
  if (!std::isfinite(dark_rate_hz) || dark_rate_hz < 0.0)
    fail(ErrorCode::invalid_argument, "dark count rate must be >= 0");
  if (afterpulse_delay.max < afterpulse_delay.min)
    fail(ErrorCode::invalid_argument, "afterpulse window max < min");
  if (afterpulse_prob > 0.0 && afterpulse_delay.min < dead_time)
    fail(ErrorCode::invalid_argument, "afterpulse window must start at or after the dead time");
}

DetectorParams DetectorParams::ideal() { return DetectorParams{}; }

DetectorParams DetectorParams::apd_paper() {
  return DetectorParams{.efficiency = 1.0,
                        .dead_time = ns(30),
                        .dark_rate_hz = 0.0,
                        .jitter_fwhm = Tick(0),
                        .afterpulse_prob = 0.005,
                        .afterpulse_delay = {ns(30), ns(50)}};
}

DetectorParams DetectorParams::sspd_paper() {
  return DetectorParams{.efficiency = 0.10,
                        .dead_time = ns(5),
                        .dark_rate_hz = 50.0,
                        .jitter_fwhm = Tick(100),
                        .afterpulse_prob = 0.0,
                        .afterpulse_delay = {ns(5), ns(5)}};
}

std::optional<DetectorParams> detector_preset(std::string_view name) {
  if (name == "apd-paper") return DetectorParams::apd_paper();
  if (name == "sspd-paper") return DetectorParams::sspd_paper();
  if (name == "ideal") return DetectorParams::ideal();
  return std::nullopt;
}

std::pair<PhotonStream, PhotonStream> beam_splitter(const PhotonStream& s, double transmittance,
                                                    RngSeed seed) {
  if (!is_probability(transmittance))
    fail(ErrorCode::invalid_argument, "transmittance must lie in [0, 1]");
  std::pair<PhotonStream, PhotonStream> out{{{}, s.duration, s.label + "/A"},
                                            {{}, s.duration, s.label + "/B"}};
  Rng rng(seed);
  for (Tick t : s.events) {
    if (rng.uniform() < transmittance) {
      out.first.events.push_back(t);
    } else {
      out.second.events.push_back(t);
    }
  }
  return out;
}

PhotonStream bernoulli_thin(const PhotonStream& s, double keep, RngSeed seed) {
  if (!is_probability(keep)) fail(ErrorCode::invalid_argument, "keep probability must lie in [0, 1]");
  PhotonStream out{{}, s.duration, s.label};
  if (keep == 1.0) {
    out.events = s.events;
    return out;
  }
  out.events.reserve(static_cast<std::size_t>(static_cast<double>(s.events.size()) * keep * 1.01) + 16);
  Rng rng(seed);
  for (Tick t : s.events)
    if (rng.uniform() < keep) out.events.push_back(t);
  return out;
}

std::vector<Tick> apply_dead_time(std::span<const Tick> events, Tick dead_time) {
  std::vector<Tick> kept;
  kept.reserve(events.size());
  for (Tick t : events) {
    if (kept.empty() || t - kept.back() >= dead_time) kept.push_back(t);
  }
  return kept;
}

ClickStream detect(const PhotonStream& s, const DetectorParams& p, RngSeed seed,
                   std::uint8_t detector_id) {
  p.validate();
  const Tick duration = s.duration;

  // (1) efficiency, (2) dark counts.
  ClickStream candidates;
  candidates.duration = duration;
  candidates.detector_id = detector_id;
  candidates.events = bernoulli_thin(s, p.efficiency, seed.child(kThin)).events;
  candidates.provenance.assign(candidates.events.size(), ClickOrigin::photon);
  if (p.dark_rate_hz > 0.0 && duration.value() > 0) {
    const PhotonStream dark = simulate_poisson(p.dark_rate_hz, duration, seed.child(kDark));
    ClickStream dark_clicks{dark.events,
                            std::vector<ClickOrigin>(dark.events.size(), ClickOrigin::dark),
                            duration, detector_id};
    candidates = merge_streams(candidates, dark_clicks);
  }

  // (3) jitter, re-sort, collision bump.
  if (p.jitter_fwhm.value() > 0) {
    const double sigma = static_cast<double>(p.jitter_fwhm.value()) / kFwhmPerSigma;
    Rng rng(seed.child(kJitter));
    std::vector<std::int64_t> moved(candidates.events.size());
    for (std::size_t i = 0; i < moved.size(); ++i) {
      const auto offset = static_cast<std::int64_t>(std::floor(sigma * rng.normal() + 0.5));
      const auto t = static_cast<std::int64_t>(candidates.events[i].value()) + offset;
      moved[i] = std::max<std::int64_t>(t, 0);
    }
    std::vector<std::size_t> order(moved.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return moved[x] < moved[y]; });
    std::vector<ClickOrigin> tags(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      tags[i] = candidates.provenance[order[i]];
      candidates.events[i] = Tick(static_cast<std::uint64_t>(moved[order[i]]));
    }
    candidates.provenance = std::move(tags);
  }
  resolve_collisions(candidates.events, duration, &candidates.provenance);

  // (4) + (5): one sweep over candidates and pending afterpulses in time order.
  ClickStream out;
  out.duration = duration;
  out.detector_id = detector_id;
  out.events.reserve(candidates.events.size());
  out.provenance.reserve(candidates.events.size());
  Rng afterpulse_rng(seed.child(kAfterpulse));
  std::priority_queue<Tick, std::vector<Tick>, std::greater<>> pending;
  const std::uint64_t window = (p.afterpulse_delay.max - p.afterpulse_delay.min).value();
  std::size_t next = 0;
  while (next < candidates.events.size() || !pending.empty()) {
    // Candidates win ties against afterpulses.
    const bool from_pending =
        !pending.empty() &&
        (next == candidates.events.size() || pending.top() < candidates.events[next]);
    Tick t;
    ClickOrigin origin;
    if (from_pending) {
      t = pending.top();
      pending.pop();
      origin = ClickOrigin::afterpulse;
    } else {
      t = candidates.events[next];
      origin = candidates.provenance[next];
      ++next;
    }
    if (!out.events.empty() && t - out.events.back() < p.dead_time) continue;
    if (!out.events.empty() && t == out.events.back()) continue;
    out.events.push_back(t);
    out.provenance.push_back(origin);
    if (p.afterpulse_prob > 0.0 && afterpulse_rng.uniform() < p.afterpulse_prob) {
      const Tick delay =
          p.afterpulse_delay.min +
          Tick(window == 0 ? 0 : static_cast<std::uint64_t>(afterpulse_rng.uniform() *
                                                            static_cast<double>(window)));
      if (delay.value() > 0 && t.value() < duration.value() - delay.value())
        pending.push(t + delay);
    }
  }
  return out;
}

std::optional<StreamViolation> validate_clicks(const ClickStream& c, const DetectorParams& p) {
  if (auto v = validate_stream(c)) return v;
  for (std::size_t i = 1; i < c.events.size(); ++i)
    if (c.events[i] - c.events[i - 1] < p.dead_time)
      return StreamViolation{i, ViolationKind::spacing};
  return std::nullopt;
}

}  // namespace g2lab
