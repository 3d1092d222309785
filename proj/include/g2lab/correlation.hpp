#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "g2lab/stream.hpp"

namespace g2lab {

/// Delay axis [tau_min, tau_max) cut into equal bins.
struct HistogramGeometry {
  Delay tau_min;
  Delay tau_max;
  Delay bin_width;

  /// Throws ErrorCode::invalid_argument unless bin_width > 0, tau_max > tau_min
  /// and the span is a whole number of bins.
  void validate() const;
  std::size_t bins() const;
  Delay bin_lower(std::size_t i) const;
  Delay bin_center(std::size_t i) const;

  friend bool operator==(const HistogramGeometry&, const HistogramGeometry&) = default;
};

enum class CorrelationMode { all_pairs_forward, start_stop_first, cross_two_channel };

std::string_view to_string(CorrelationMode mode);
std::optional<CorrelationMode> parse_correlation_mode(std::string_view name);

/// Coincidence counts plus what normalize_g2 needs: the number of start
/// events and the stop-channel click count over the total duration.
struct CorrelationHistogram {
  HistogramGeometry geometry;
  CorrelationMode mode = CorrelationMode::all_pairs_forward;
  bool folded = false;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_start_events = 0;
  std::uint64_t n_stop_events = 0;
  Tick total_duration;

  /// Stop-channel clicks per second (dark counts included).
  double stop_rate() const;

  friend bool operator==(const CorrelationHistogram&, const CorrelationHistogram&) = default;
};

/// Every ordered pair i < j with t_j - t_i in [tau_min, tau_max). Only events
/// before `start_cutoff` act as starts or enter the metadata; later events
/// serve as stops only (overlap margin for segmented processing).
CorrelationHistogram correlate_all_pairs(std::span<const Tick> events, Tick duration,
                                         const HistogramGeometry& geometry,
                                         std::optional<Tick> start_cutoff = std::nullopt);
CorrelationHistogram correlate_all_pairs(const ClickStream& c, const HistogramGeometry& geometry,
                                         std::optional<Tick> start_cutoff = std::nullopt);

/// Delays t_b - t_a of all pairs in [-tau_max, tau_max). a is the start channel.
CorrelationHistogram correlate_cross(std::span<const Tick> a, std::span<const Tick> b,
                                     Tick duration, Delay tau_max, Delay bin_width);
CorrelationHistogram correlate_cross(const ClickStream& a, const ClickStream& b, Delay tau_max,
                                     Delay bin_width);

/// Oscilloscope-style trigger: each click contributes at most one delay, to
/// its immediate successor, when that delay is in [tau_min, tau_max).
CorrelationHistogram start_stop_first(std::span<const Tick> events, Tick duration,
                                      const HistogramGeometry& window);
CorrelationHistogram start_stop_first(const ClickStream& c, const HistogramGeometry& window);

/// Start-stop pairs with delay in [w_min, w_max), tallied by the stop click's provenance.
std::array<std::uint64_t, 3> start_stop_stop_origins(const ClickStream& c, Delay w_min,
                                                     Delay w_max);

/// Folds a symmetric two-sided cross histogram onto |tau| in [0, tau_max).
/// The start count doubles so the folded curve keeps the same normalization.
CorrelationHistogram fold_cross(const CorrelationHistogram& h);

/// Element-wise count sum with summed metadata. Throws
/// ErrorCode::geometry_mismatch on different geometry, mode or folding.
CorrelationHistogram merge_histograms(const CorrelationHistogram& h1,
                                      const CorrelationHistogram& h2);

struct G2Curve {
  HistogramGeometry geometry;
  CorrelationMode mode = CorrelationMode::all_pairs_forward;
  bool rate_corrected = false;
  std::uint64_t n_start_events = 0;
  double stop_rate_hz = 0.0;
  std::vector<Delay> tau_centers;
  std::vector<std::uint64_t> counts;
  std::vector<double> g2;
  std::vector<double> g2_err;
  /// g2 per coincidence count in each bin; g2_err = sqrt(counts) * scale.
  std::vector<double> scale;

  std::size_t size() const { return g2.size(); }
  double tau_ns(std::size_t i) const { return to_ns(tau_centers[i]); }
  /// g2_err / g2; +infinity for empty bins.
  double relative_error(std::size_t i) const;
  /// Bins whose center lies in [lo_ns, hi_ns].
  G2Curve slice(double lo_ns, double hi_ns) const;
};

/// g2[i] = counts[i] / (n_start * stop_rate * bin_width), Poisson errors.
/// With `rate_correction` on a start-stop histogram each bin is further
/// multiplied by exp(stop_rate * tau_center), undoing the first-successor bias.
/// Throws ErrorCode::degenerate when n_start or the stop rate is zero.
G2Curve normalize_g2(const CorrelationHistogram& h, bool rate_correction = false);

}  // namespace g2lab
