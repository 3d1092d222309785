#include "g2lab/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace g2lab {

void HistogramGeometry::validate() const {
  if (bin_width.value() <= 0) fail(ErrorCode::invalid_argument, "bin width must be positive");
  if (tau_max <= tau_min) fail(ErrorCode::invalid_argument, "tau_max must exceed tau_min");
  if ((tau_max.value() - tau_min.value()) % bin_width.value() != 0)
    fail(ErrorCode::invalid_argument, "histogram span must be a whole number of bins");
}

std::size_t HistogramGeometry::bins() const {
  return static_cast<std::size_t>((tau_max.value() - tau_min.value()) / bin_width.value());
}

Delay HistogramGeometry::bin_lower(std::size_t i) const {
  return Delay(tau_min.value() + static_cast<std::int64_t>(i) * bin_width.value());
}

Delay HistogramGeometry::bin_center(std::size_t i) const {
  return Delay(bin_lower(i).value() + bin_width.value() / 2);
}

std::string_view to_string(CorrelationMode mode) {
  switch (mode) {
    case CorrelationMode::all_pairs_forward: return "all_pairs";
    case CorrelationMode::start_stop_first: return "start_stop_first";
    case CorrelationMode::cross_two_channel: return "cross";
  }
  return "unknown";
}

std::optional<CorrelationMode> parse_correlation_mode(std::string_view name) {
  if (name == "all_pairs") return CorrelationMode::all_pairs_forward;
  if (name == "start_stop_first") return CorrelationMode::start_stop_first;
  if (name == "cross") return CorrelationMode::cross_two_channel;
  return std::nullopt;
}

double CorrelationHistogram::stop_rate() const { return event_rate(n_stop_events, total_duration); }

namespace {

CorrelationHistogram empty_histogram(const HistogramGeometry& g, CorrelationMode mode) {
  g.validate();
  CorrelationHistogram h;
  h.geometry = g;
  h.mode = mode;
  h.counts.assign(g.bins(), 0);
  return h;
}

inline std::int64_t signed_ps(Tick t) { return static_cast<std::int64_t>(t.value()); }

}  // namespace

CorrelationHistogram correlate_all_pairs(std::span<const Tick> events, Tick duration,
                                         const HistogramGeometry& geometry,
                                         std::optional<Tick> start_cutoff) {
  CorrelationHistogram h = empty_histogram(geometry, CorrelationMode::all_pairs_forward);
  if (geometry.tau_min.value() < 0)
    fail(ErrorCode::invalid_argument, "single-channel histograms need tau_min >= 0");
  const Tick cutoff = start_cutoff.value_or(duration);
  const std::int64_t lo = geometry.tau_min.value();
  const std::int64_t hi = geometry.tau_max.value();
  const std::int64_t width = geometry.bin_width.value();

  const std::size_t n = events.size();
  std::size_t first = 0;  // first j with t_j - t_i >= tau_min; monotone in i
  std::size_t starts = 0;
  for (std::size_t i = 0; i < n && events[i] < cutoff; ++i) {
    ++starts;
    const std::int64_t ti = signed_ps(events[i]);
    first = std::max(first, i + 1);
    while (first < n && signed_ps(events[first]) - ti < lo) ++first;
    for (std::size_t j = first; j < n; ++j) {
      const std::int64_t d = signed_ps(events[j]) - ti;
      if (d >= hi) break;
      ++h.counts[static_cast<std::size_t>((d - lo) / width)];
    }
  }
  h.n_start_events = starts;
  h.n_stop_events = starts;
  h.total_duration = std::min(cutoff, duration);
  return h;
}

CorrelationHistogram correlate_all_pairs(const ClickStream& c, const HistogramGeometry& geometry,
                                         std::optional<Tick> start_cutoff) {
  return correlate_all_pairs(c.events, c.duration, geometry, start_cutoff);
}

CorrelationHistogram correlate_cross(std::span<const Tick> a, std::span<const Tick> b,
                                     Tick duration, Delay tau_max, Delay bin_width) {
  const HistogramGeometry g{-tau_max, tau_max, bin_width};
  CorrelationHistogram h = empty_histogram(g, CorrelationMode::cross_two_channel);
  const std::int64_t span = tau_max.value();
  const std::int64_t width = bin_width.value();
  std::size_t first = 0;
  for (Tick ta : a) {
    const std::int64_t t = signed_ps(ta);
    while (first < b.size() && signed_ps(b[first]) - t < -span) ++first;
    for (std::size_t j = first; j < b.size(); ++j) {
      const std::int64_t d = signed_ps(b[j]) - t;
      if (d >= span) break;
      ++h.counts[static_cast<std::size_t>((d + span) / width)];
    }
  }
  h.n_start_events = a.size();
  h.n_stop_events = b.size();
  h.total_duration = duration;
  return h;
}

CorrelationHistogram correlate_cross(const ClickStream& a, const ClickStream& b, Delay tau_max,
                                     Delay bin_width) {
  if (a.duration != b.duration)
    fail(ErrorCode::duration_mismatch, "cross-correlated streams must share one duration");
  return correlate_cross(a.events, b.events, a.duration, tau_max, bin_width);
}

CorrelationHistogram start_stop_first(std::span<const Tick> events, Tick duration,
                                      const HistogramGeometry& window) {
  CorrelationHistogram h = empty_histogram(window, CorrelationMode::start_stop_first);
  if (window.tau_min.value() < 0)
    fail(ErrorCode::invalid_argument, "start-stop window needs tau_min >= 0");
  const std::int64_t lo = window.tau_min.value();
  const std::int64_t hi = window.tau_max.value();
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    const std::int64_t d = signed_ps(events[i + 1]) - signed_ps(events[i]);
    if (d >= lo && d < hi) ++h.counts[static_cast<std::size_t>((d - lo) / window.bin_width.value())];
  }
  h.n_start_events = events.size();
  h.n_stop_events = events.size();
  h.total_duration = duration;
  return h;
}

CorrelationHistogram start_stop_first(const ClickStream& c, const HistogramGeometry& window) {
  return start_stop_first(c.events, c.duration, window);
}

std::array<std::uint64_t, 3> start_stop_stop_origins(const ClickStream& c, Delay w_min,
                                                     Delay w_max) {
  std::array<std::uint64_t, 3> tally{};
  for (std::size_t i = 0; i + 1 < c.events.size(); ++i) {
    const std::int64_t d = signed_ps(c.events[i + 1]) - signed_ps(c.events[i]);
    if (d >= w_min.value() && d < w_max.value())
      ++tally[static_cast<std::size_t>(c.provenance[i + 1])];
  }
  return tally;
}

CorrelationHistogram fold_cross(const CorrelationHistogram& h) {
  const auto& g = h.geometry;
  if (h.mode != CorrelationMode::cross_two_channel || h.folded ||
      g.tau_min.value() != -g.tau_max.value() || g.tau_max.value() % g.bin_width.value() != 0)
    fail(ErrorCode::invalid_argument, "fold_cross needs an unfolded symmetric cross histogram");
  CorrelationHistogram out = h;
  out.folded = true;
  out.geometry = HistogramGeometry{Delay(0), g.tau_max, g.bin_width};
  const std::size_t half = static_cast<std::size_t>(g.tau_max.value() / g.bin_width.value());
  out.counts.assign(half, 0);
  // Negative bin [-(i+1)w, -iw) pairs with positive bin [iw, (i+1)w).
  for (std::size_t i = 0; i < half; ++i) out.counts[i] = h.counts[half + i] + h.counts[half - 1 - i];
  out.n_start_events = 2 * h.n_start_events;
  return out;
}

CorrelationHistogram merge_histograms(const CorrelationHistogram& h1,
                                      const CorrelationHistogram& h2) {
  if (!(h1.geometry == h2.geometry) || h1.mode != h2.mode || h1.folded != h2.folded ||
      h1.counts.size() != h2.counts.size())
    fail(ErrorCode::geometry_mismatch, "histograms differ in geometry or mode");
  CorrelationHistogram out = h1;
  for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += h2.counts[i];
  out.n_start_events += h2.n_start_events;
  out.n_stop_events += h2.n_stop_events;
  out.total_duration += h2.total_duration;
  return out;
}

double G2Curve::relative_error(std::size_t i) const {
  if (counts[i] == 0) return std::numeric_limits<double>::infinity();
  return g2_err[i] / g2[i];
}

G2Curve G2Curve::slice(double lo_ns, double hi_ns) const {
  G2Curve out = *this;
  out.tau_centers.clear();
  out.counts.clear();
  out.g2.clear();
  out.g2_err.clear();
  out.scale.clear();
  for (std::size_t i = 0; i < size(); ++i) {
    const double t = tau_ns(i);
    if (t < lo_ns || t > hi_ns) continue;
    out.tau_centers.push_back(tau_centers[i]);
    out.counts.push_back(counts[i]);
    out.g2.push_back(g2[i]);
    out.g2_err.push_back(g2_err[i]);
    out.scale.push_back(scale[i]);
  }
  return out;
}

G2Curve normalize_g2(const CorrelationHistogram& h, bool rate_correction) {
  const double stop_rate = h.stop_rate();
  if (h.n_start_events == 0 || stop_rate <= 0.0)
    fail(ErrorCode::degenerate, "cannot normalize: zero start events or zero stop rate");
  G2Curve c;
  c.geometry = h.geometry;
  c.mode = h.mode;
  c.rate_corrected = rate_correction && h.mode == CorrelationMode::start_stop_first;
  c.n_start_events = h.n_start_events;
  c.stop_rate_hz = stop_rate;
  const double bin_s = static_cast<double>(h.geometry.bin_width.value()) * 1e-12;
  const double base = 1.0 / (static_cast<double>(h.n_start_events) * stop_rate * bin_s);
  const std::size_t n = h.counts.size();
  c.tau_centers.resize(n);
  c.counts = h.counts;
  c.g2.resize(n);
  c.g2_err.resize(n);
  c.scale.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.tau_centers[i] = h.geometry.bin_center(i);
    double s = base;
    if (c.rate_corrected) s *= std::exp(stop_rate * to_ns(c.tau_centers[i]) * 1e-9);
    const auto k = static_cast<double>(h.counts[i]);
    c.scale[i] = s;
    c.g2[i] = k * s;
    c.g2_err[i] = std::sqrt(k) * s;
  }
  return c;
}

}  // namespace g2lab
