#include "doctest.h"
#include "g2lab/config.hpp"
#include "g2lab/io.hpp"
#include "g2lab/pipeline.hpp"

using namespace g2lab;

namespace {

ExperimentConfig small_three_level(unsigned workers) {
  auto cfg = parse_config(R"({
    "source": {"kind": "three_level", "preset": "nv-default"},
    "configuration": "hbt",
    "detectors": [{"preset": "apd-paper", "efficiency": 0.1}, {"preset": "apd-paper", "efficiency": 0.1}],
    "duration_s": 0.05,
    "segment_s": 0.01,
    "seed": 99,
    "correlation": {"estimator": "cross", "tau_max_ns": 200, "bin_width_ns": 2},
    "fit": {"model": "g2", "tau_min_ns": 0, "tau_max_ns": 200}
  })");
  cfg.workers = workers;
  return cfg;
}

}  // namespace

TEST_CASE("pipeline output does not depend on the worker count") {
  const auto one = run_experiment(small_three_level(1));
  const auto three = run_experiment(small_three_level(3));
  CHECK(one.histogram == three.histogram);
  CHECK(one.segments == 5);
  CHECK(summary_json(small_three_level(1), one) == summary_json(small_three_level(3), three));
  CHECK(one.curve.geometry.tau_min == Delay(0));
  REQUIRE(one.fit.has_value());
}

TEST_CASE("pipeline writes its outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "g2lab-unit" / "pipeline";
  std::filesystem::remove_all(dir);
  const auto out = run_pipeline(small_three_level(2), dir);
  CHECK(std::filesystem::exists(out.curve));
  REQUIRE(out.fit.has_value());
  CHECK(std::filesystem::exists(*out.fit));
  const auto curve = parse_curve_csv(read_text_file(out.curve));
  CHECK(curve.size() == 100);
  const auto first = read_text_file(out.summary);
  run_pipeline(small_three_level(1), dir);
  CHECK(read_text_file(out.summary) == first);
}

TEST_CASE("single-detector start-stop reports stop provenance") {
  auto cfg = parse_config(R"({
    "source": {"kind": "poisson", "rate_hz": 300000},
    "configuration": "single_detector",
    "detectors": [{"preset": "apd-paper"}],
    "duration_s": 0.2,
    "seed": 3,
    "correlation": {"estimator": "start_stop_first", "tau_min_ns": 5, "tau_max_ns": 200,
                    "bin_width_ns": 1, "rate_correction": true}
  })");
  const auto r = run_experiment(cfg);
  REQUIRE(r.start_stop_origins.has_value());
  CHECK((*r.start_stop_origins)[2] > 0);
  CHECK(r.detectors.size() == 1);
  CHECK(r.detectors[0].by_origin[2] > 0);
  CHECK(r.curve.rate_corrected);
  for (std::size_t i = 0; i < 25; ++i) CHECK(r.curve.counts[i] == 0);
}
