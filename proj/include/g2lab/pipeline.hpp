#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "g2lab/config.hpp"
#include "g2lab/fitting.hpp"

namespace g2lab {

inline constexpr const char* kVersion = "0.1.0";

struct DetectorTally {
  std::uint64_t clicks = 0;
  std::array<std::uint64_t, 3> by_origin{};  ///< photon, dark, afterpulse
};

struct ExperimentResult {
  std::uint64_t photons_emitted = 0;
  std::size_t segments = 0;
  std::vector<DetectorTally> detectors;
  /// Start-stop pairs inside the correlation window by stop provenance
  /// (single-detector start_stop_first runs only).
  std::optional<std::array<std::uint64_t, 3>> start_stop_origins;
  CorrelationHistogram histogram;
  G2Curve curve;
  std::optional<FitResult> fit;
  std::optional<LinearFit> linear_fit;
  std::vector<ThreeLevelParams> fitted_rates;
};

/// simulate -> (split) -> detect -> correlate -> normalize -> fit, segment by
/// segment. Segment k draws from seed.child(k); its emitter uses sub-stream 0,
/// so single-detector and HBT runs with one seed see the same photons. Pairs
/// spanning a segment cut are not counted and each segment starts with a
/// fresh detector. Output is identical for any worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct PipelineOutputs {
  std::filesystem::path curve;
  std::optional<std::filesystem::path> fit;
  std::filesystem::path summary;
};

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Runs the experiment and writes curve CSV, fit report (if a fit was
/// requested) and summary JSON below `out_dir`.
PipelineOutputs run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace g2lab
