#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "g2lab/correlation.hpp"
#include "g2lab/detectors.hpp"
#include "g2lab/emitters.hpp"

namespace g2lab {

enum class Configuration { single_detector, hbt };
enum class FitModel { none, g2, linear };

struct DetectorSpec {
  std::string preset;  ///< empty when fully explicit
  DetectorParams params;
};

struct CorrelationSpec {
  CorrelationMode estimator = CorrelationMode::all_pairs_forward;
  HistogramGeometry geometry{Delay(0), delay_ns(200), delay_ns(1)};
  bool rate_correction = false;
  bool fold = true;
};

struct FitSpec {
  FitModel model = FitModel::none;
  double tau_min_ns = 0.0;
  double tau_max_ns = 1e300;
  std::optional<double> k21_hz;
};

struct OutputSpec {
  std::string curve = "curve.csv";
  std::string fit = "fit.json";
  std::string summary = "summary.json";
};

struct ExperimentConfig {
  std::string name = "experiment";
  SourceSpec source = PoissonSource{300'000.0};
  Configuration configuration = Configuration::single_detector;
  std::vector<DetectorSpec> detectors;
  double transmittance = 0.5;
  Tick duration;
  Tick segment_length{kTicksPerSecond};
  unsigned workers = 1;
  RngSeed seed;
  CorrelationSpec correlation;
  FitSpec fit;
  OutputSpec output;
};

/// Parses and validates a JSON experiment description. Errors are thrown as
/// ErrorCode::config with a "<origin>:<line>: <json pointer>: message" text.
ExperimentConfig parse_config(std::string_view json_text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

std::string_view to_string(Configuration c);
std::string_view to_string(FitModel m);

}  // namespace g2lab
