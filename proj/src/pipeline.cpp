#include "g2lab/pipeline.hpp"

#include "g2lab/io.hpp"
#include "json.hpp"

namespace g2lab {

namespace {

enum SegmentStage : std::uint64_t { kEmitter = 0, kSingleDetector = 1, kSplitter = 2, kDetectorA = 3, kDetectorB = 4 };

struct SegmentOutcome {
  std::uint64_t photons = 0;
  std::vector<DetectorTally> detectors;
  std::array<std::uint64_t, 3> start_stop_origins{};
  CorrelationHistogram histogram;
};

DetectorTally tally(const ClickStream& c) {
  DetectorTally t;
  t.clicks = c.events.size();
  for (ClickOrigin o : c.provenance) ++t.by_origin[static_cast<std::size_t>(o)];
  return t;
}

SegmentOutcome run_segment(const ExperimentConfig& cfg, Tick duration, RngSeed seed) {
  SegmentOutcome out;
  const PhotonStream photons = simulate_source(cfg.source, duration, seed.child(kEmitter));
  out.photons = photons.events.size();
  const auto& geom = cfg.correlation.geometry;

  if (cfg.configuration == Configuration::single_detector) {
    const ClickStream clicks = detect(photons, cfg.detectors[0].params, seed.child(kSingleDetector), 0);
    out.detectors.push_back(tally(clicks));
    if (cfg.correlation.estimator == CorrelationMode::start_stop_first) {
      out.histogram = start_stop_first(clicks, geom);
      out.start_stop_origins = start_stop_stop_origins(clicks, geom.tau_min, geom.tau_max);
    } else {
      out.histogram = correlate_all_pairs(clicks, geom);
    }
    return out;
  }

  const auto [arm_a, arm_b] = beam_splitter(photons, cfg.transmittance, seed.child(kSplitter));
  const ClickStream a = detect(arm_a, cfg.detectors[0].params, seed.child(kDetectorA), 0);
  const ClickStream b = detect(arm_b, cfg.detectors[1].params, seed.child(kDetectorB), 1);
  out.detectors.push_back(tally(a));
  out.detectors.push_back(tally(b));
  out.histogram = correlate_cross(a, b, geom.tau_max, geom.bin_width);
  if (cfg.correlation.fold) out.histogram = fold_cross(out.histogram);
  return out;
}

nlohmann::ordered_json source_json(const SourceSpec& s) {
  nlohmann::ordered_json j;
  if (const auto* p = std::get_if<PoissonSource>(&s)) {
    j["kind"] = "poisson";
    j["rate_hz"] = p->rate_hz;
  } else if (const auto* f = std::get_if<FockSource>(&s)) {
    j["kind"] = "fock";
    j["n"] = f->n;
    j["mode_duration_ps"] = f->mode_duration.value();
  } else {
    const auto& t = std::get<ThreeLevelSource>(s).params;
    j["kind"] = "three_level";
    j["k12_hz"] = t.k12;
    j["k21_hz"] = t.k21;
    j["k23_hz"] = t.k23;
    j["k31_hz"] = t.k31;
  }
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const SegmentPlan plan{cfg.duration, cfg.segment_length};
  const auto outcomes = map_segments(plan.count(), cfg.workers, [&](std::size_t k) {
    return run_segment(cfg, plan.duration(k), cfg.seed.child(k));
  });

  ExperimentResult r;
  r.segments = outcomes.size();
  r.detectors.resize(cfg.detectors.size());
  std::array<std::uint64_t, 3> origins{};
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    r.photons_emitted += o.photons;
    for (std::size_t d = 0; d < o.detectors.size(); ++d) {
      r.detectors[d].clicks += o.detectors[d].clicks;
      for (std::size_t t = 0; t < 3; ++t) r.detectors[d].by_origin[t] += o.detectors[d].by_origin[t];
    }
    for (std::size_t t = 0; t < 3; ++t) origins[t] += o.start_stop_origins[t];
    r.histogram = k == 0 ? o.histogram : merge_histograms(r.histogram, o.histogram);
  }
  if (cfg.configuration == Configuration::single_detector &&
      cfg.correlation.estimator == CorrelationMode::start_stop_first)
    r.start_stop_origins = origins;

  r.curve = normalize_g2(r.histogram, cfg.correlation.rate_correction);
  const G2Curve fit_range = r.curve.slice(cfg.fit.tau_min_ns, cfg.fit.tau_max_ns);
  if (cfg.fit.model == FitModel::g2) {
    r.fit = fit_g2(fit_range);
    if (cfg.fit.k21_hz) r.fitted_rates = rates_from_model(r.fit->model, *cfg.fit.k21_hz);
  } else if (cfg.fit.model == FitModel::linear) {
    r.linear_fit = fit_linear(fit_range);
  }
  return r;
}

std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
  nlohmann::ordered_json j;
  j["g2lab_version"] = kVersion;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed.seed;
  j["stream_id"] = cfg.seed.stream_id;
  j["configuration"] = to_string(cfg.configuration);
  j["source"] = source_json(cfg.source);
  j["duration_ps"] = cfg.duration.value();
  j["segment_ps"] = cfg.segment_length.value();
  j["segments"] = r.segments;
  j["photons_emitted"] = r.photons_emitted;
  j["photon_rate_hz"] = event_rate(r.photons_emitted, cfg.duration);
  auto dets = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < r.detectors.size(); ++d) {
    const auto& t = r.detectors[d];
    nlohmann::ordered_json dj;
    dj["id"] = d;
    dj["preset"] = cfg.detectors[d].preset;
    dj["clicks"] = t.clicks;
    dj["click_rate_hz"] = event_rate(t.clicks, cfg.duration);
    dj["photon_clicks"] = t.by_origin[0];
    dj["dark_clicks"] = t.by_origin[1];
    dj["afterpulse_clicks"] = t.by_origin[2];
    dets.push_back(dj);
  }
  j["detectors"] = dets;

  nlohmann::ordered_json h;
  h["estimator"] = to_string(r.histogram.mode);
  h["folded"] = r.histogram.folded;
  h["tau_min_ps"] = r.histogram.geometry.tau_min.value();
  h["tau_max_ps"] = r.histogram.geometry.tau_max.value();
  h["bin_width_ps"] = r.histogram.geometry.bin_width.value();
  h["n_start_events"] = r.histogram.n_start_events;
  h["stop_rate_hz"] = r.histogram.stop_rate();
  std::uint64_t total = 0;
  for (auto c : r.histogram.counts) total += c;
  h["total_counts"] = total;
  h["rate_corrected"] = r.curve.rate_corrected;
  j["histogram"] = h;

  if (r.start_stop_origins) {
    const auto& o = *r.start_stop_origins;
    const std::uint64_t pairs = o[0] + o[1] + o[2];
    nlohmann::ordered_json s;
    s["pairs"] = pairs;
    s["photon_stops"] = o[0];
    s["dark_stops"] = o[1];
    s["afterpulse_stops"] = o[2];
    s["afterpulse_fraction"] = pairs ? static_cast<double>(o[2]) / static_cast<double>(pairs) : 0.0;
    j["start_stop"] = s;
  }

  nlohmann::ordered_json f;
  f["model"] = to_string(cfg.fit.model);
  if (r.fit) {
    f["a"] = r.fit->model.a;
    f["lambda1_hz"] = r.fit->model.lambda1;
    f["lambda2_hz"] = r.fit->model.lambda2;
    f["residual_sum"] = r.fit->residual_sum;
    f["converged"] = r.fit->converged;
    if (!r.fitted_rates.empty()) {
      auto rates = nlohmann::ordered_json::array();
      for (const auto& p : r.fitted_rates)
        rates.push_back({{"k12_hz", p.k12}, {"k21_hz", p.k21}, {"k23_hz", p.k23}, {"k31_hz", p.k31}});
      f["rate_candidates"] = rates;
    }
  }
  if (r.linear_fit) {
    f["slope_per_ns"] = r.linear_fit->slope_per_ns;
    f["slope_err_per_ns"] = r.linear_fit->slope_err;
    f["intercept"] = r.linear_fit->intercept;
    f["residual_sum"] = r.linear_fit->residual_sum;
  }
  j["fit"] = f;
  return j.dump(2) + "\n";
}

PipelineOutputs run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  const ExperimentResult r = run_experiment(cfg);
  PipelineOutputs out;
  out.curve = out_dir / cfg.output.curve;
  out.summary = out_dir / cfg.output.summary;
  write_text_file(out.curve, format_curve_csv(r.curve));
  if (r.fit) {
    out.fit = out_dir / cfg.output.fit;
    write_text_file(*out.fit, format_fit_json(*r.fit));
  } else if (r.linear_fit) {
    out.fit = out_dir / cfg.output.fit;
    write_text_file(*out.fit, format_linear_fit_json(*r.linear_fit));
  }
  write_text_file(out.summary, summary_json(cfg, r));
  return out;
}

}  // namespace g2lab
