// g2lab command-line front end.
//
// Exit codes:
//   0  success
//   1  usage error (bad flags, missing arguments)
//   2  invalid configuration
//   3  I/O failure or corrupt input file
//   4  validation found a violation
//   5  numerical failure (degenerate data, overflow)
//   6  invalid argument or incompatible inputs
//   7  internal error
//
// Errors go to stderr as "g2lab: error E_CODE: message".

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "g2lab/config.hpp"
#include "g2lab/detectors.hpp"
#include "g2lab/error.hpp"
#include "g2lab/io.hpp"
#include "g2lab/pipeline.hpp"

namespace fs = std::filesystem;
using namespace g2lab;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kIo = 3,
  kViolation = 4,
  kNumerical = 5,
  kArgument = 6,
  kInternal = 7,
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return kConfig;
    case ErrorCode::io:
    case ErrorCode::corrupt_file: return kIo;
    case ErrorCode::degenerate:
    case ErrorCode::overflow: return kNumerical;
    case ErrorCode::invalid_argument:
    case ErrorCode::duration_mismatch:
    case ErrorCode::geometry_mismatch: return kArgument;
  }
  return kInternal;
}

// Seed sub-streams of the staged commands; the same numbering as one
// pipeline segment.
constexpr std::uint64_t kEmitterStage = 0, kSingleStage = 1, kSplitStage = 2, kArmA = 3, kArmB = 4;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<unsigned> workers;
  std::optional<double> duration_s;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--out-dir", c.out_dir, "output directory")->envname("G2LAB_OUT_DIR");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed.seed = *c.seed;
  if (c.workers) cfg.workers = std::max(1u, *c.workers);
  if (c.duration_s) cfg.duration = ticks_from_seconds(*c.duration_s);
  return cfg;
}

fs::path output_path(const Common& c, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() ? p : fs::path(c.out_dir) / p;
}

std::string with_suffix(const std::string& name, const std::string& suffix) {
  const fs::path p(name);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

PhotonStream as_photons(AnyStream s) {
  if (auto* p = std::get_if<PhotonStream>(&s)) return std::move(*p);
  fail(ErrorCode::invalid_argument, "expected a photon stream, got a click stream");
}

ClickStream as_clicks(AnyStream s) {
  if (auto* c = std::get_if<ClickStream>(&s)) return std::move(*c);
  // A photon stream correlates as ideal clicks.
  auto& p = std::get<PhotonStream>(s);
  const auto n = p.events.size();
  return ClickStream{std::move(p.events), std::vector<ClickOrigin>(n, ClickOrigin::photon), p.duration, 0};
}

void report(const fs::path& path, const std::string& what) {
  std::printf("wrote %s (%s)\n", path.string().c_str(), what.c_str());
}

// ---- simulate ------------------------------------------------------------

int cmd_simulate(const Common& c, const std::string& output) {
  const ExperimentConfig cfg = load(c);
  const Tick seg = align_segment_length(cfg.source, cfg.segment_length);
  const PhotonStream s =
      simulate_segmented(cfg.source, SegmentPlan{cfg.duration, seg}, cfg.seed.child(kEmitterStage), cfg.workers);
  const fs::path path = output_path(c, output);
  write_stream(path, s);
  report(path, std::to_string(s.events.size()) + " photons, " + s.label);
  return kOk;
}

// ---- detect --------------------------------------------------------------

int cmd_detect(const Common& c, const std::string& input, const std::string& output) {
  const ExperimentConfig cfg = load(c);
  const PhotonStream photons = as_photons(read_stream(input));
  if (cfg.configuration == Configuration::single_detector) {
    const ClickStream clicks = detect(photons, cfg.detectors[0].params, cfg.seed.child(kSingleStage), 0);
    const fs::path path = output_path(c, output);
    write_stream(path, clicks);
    report(path, std::to_string(clicks.events.size()) + " clicks");
    return kOk;
  }
  const auto [arm_a, arm_b] = beam_splitter(photons, cfg.transmittance, cfg.seed.child(kSplitStage));
  const ClickStream a = detect(arm_a, cfg.detectors[0].params, cfg.seed.child(kArmA), 0);
  const ClickStream b = detect(arm_b, cfg.detectors[1].params, cfg.seed.child(kArmB), 1);
  const fs::path pa = output_path(c, with_suffix(output, "_a"));
  const fs::path pb = output_path(c, with_suffix(output, "_b"));
  write_stream(pa, a);
  write_stream(pb, b);
  report(pa, std::to_string(a.events.size()) + " clicks, detector 0");
  report(pb, std::to_string(b.events.size()) + " clicks, detector 1");
  return kOk;
}

// ---- correlate -----------------------------------------------------------

struct CorrelateArgs {
  std::string input;
  std::string input_b;
  std::string output = "curve.csv";
  std::string estimator;
  std::optional<double> tau_min_ns, tau_max_ns, bin_width_ns;
  bool rate_correction = false;
  bool no_fold = false;
};

int cmd_correlate(const Common& c, const CorrelateArgs& a) {
  CorrelationSpec spec;
  if (!c.config.empty()) spec = load(c).correlation;
  if (!a.estimator.empty()) {
    const auto mode = parse_correlation_mode(a.estimator);
    if (!mode) fail(ErrorCode::invalid_argument, "unknown estimator \"" + a.estimator + "\"");
    spec.estimator = *mode;
  }
  auto& g = spec.geometry;
  if (a.tau_min_ns) g.tau_min = delay_from_ns(*a.tau_min_ns);
  if (a.tau_max_ns) g.tau_max = delay_from_ns(*a.tau_max_ns);
  if (a.bin_width_ns) g.bin_width = delay_from_ns(*a.bin_width_ns);
  if (a.rate_correction) spec.rate_correction = true;
  if (a.no_fold) spec.fold = false;

  const ClickStream first = as_clicks(read_stream(a.input));
  CorrelationHistogram h;
  switch (spec.estimator) {
    case CorrelationMode::all_pairs_forward: h = correlate_all_pairs(first, g); break;
    case CorrelationMode::start_stop_first: h = start_stop_first(first, g); break;
    case CorrelationMode::cross_two_channel: {
      if (a.input_b.empty()) fail(ErrorCode::invalid_argument, "cross estimator needs --input-b");
      const ClickStream second = as_clicks(read_stream(a.input_b));
      h = correlate_cross(first, second, g.tau_max, g.bin_width);
      if (spec.fold) h = fold_cross(h);
      break;
    }
  }
  const G2Curve curve = normalize_g2(h, spec.rate_correction);
  const fs::path path = output_path(c, a.output);
  write_text_file(path, format_curve_csv(curve));
  report(path, std::to_string(curve.size()) + " bins, " + std::string(to_string(h.mode)));
  return kOk;
}

// ---- fit -----------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string output = "fit.json";
  std::string model;
  std::optional<double> tau_min_ns, tau_max_ns, k21_hz;
};

int cmd_fit(const Common& c, const FitArgs& a) {
  FitSpec spec;
  spec.model = FitModel::g2;
  if (!c.config.empty()) {
    const auto cfg = load(c);
    if (cfg.fit.model != FitModel::none) spec = cfg.fit;
  }
  if (a.model == "g2") spec.model = FitModel::g2;
  else if (a.model == "linear") spec.model = FitModel::linear;
  else if (!a.model.empty()) fail(ErrorCode::invalid_argument, "unknown fit model \"" + a.model + "\" (g2, linear)");
  if (a.tau_min_ns) spec.tau_min_ns = *a.tau_min_ns;
  if (a.tau_max_ns) spec.tau_max_ns = *a.tau_max_ns;
  if (a.k21_hz) spec.k21_hz = *a.k21_hz;

  const G2Curve curve = parse_curve_csv(read_text_file(a.input)).slice(spec.tau_min_ns, spec.tau_max_ns);
  const fs::path path = output_path(c, a.output);
  if (spec.model == FitModel::linear) {
    const LinearFit f = fit_linear(curve);
    write_text_file(path, format_linear_fit_json(f));
    std::printf("slope = %.6g +- %.2g per ns, intercept = %.6g +- %.2g\n", f.slope_per_ns, f.slope_err,
                f.intercept, f.intercept_err);
  } else {
    const FitResult f = fit_g2(curve);
    write_text_file(path, format_fit_json(f));
    std::printf("a = %.6g, lambda1 = %.6g /s, lambda2 = %.6g /s, chi2 = %.6g (%zu bins)\n", f.model.a,
                f.model.lambda1, f.model.lambda2, f.residual_sum, f.n_points);
    if (spec.k21_hz)
      for (const auto& p : rates_from_model(f.model, *spec.k21_hz))
        std::printf("  rates: k12 = %.6g, k21 = %.6g, k23 = %.6g, k31 = %.6g /s\n", p.k12, p.k21, p.k23, p.k31);
  }
  report(path, "fit report");
  return kOk;
}

// ---- pipeline ------------------------------------------------------------

int cmd_pipeline(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const PipelineOutputs out = run_pipeline(cfg, c.out_dir);
  report(out.curve, "g2 curve");
  if (out.fit) report(*out.fit, "fit report");
  report(out.summary, "summary");
  return kOk;
}

// ---- validate ------------------------------------------------------------

int cmd_validate(const std::vector<std::string>& files, std::optional<double> dead_time_ns) {
  int status = kOk;
  for (const auto& file : files) {
    const std::string bytes = read_text_file(file);
    if (bytes.compare(0, 4, "PTS1") != 0) {
      parse_config(bytes, file);
      std::printf("%s: ok (config)\n", file.c_str());
      continue;
    }
    // decode_stream rejects ordering and duration violations itself; the
    // scan below names the offending index for a click spacing check.
    const AnyStream s = decode_stream(bytes);
    if (const auto* p = std::get_if<PhotonStream>(&s)) {
      std::printf("%s: ok (photon stream, %zu events)\n", file.c_str(), p->events.size());
      continue;
    }
    const auto& clicks = std::get<ClickStream>(s);
    if (dead_time_ns) {
      DetectorParams p = DetectorParams::ideal();
      p.dead_time = ticks_from_ns(*dead_time_ns);
      if (const auto v = validate_clicks(clicks, p)) {
        std::fprintf(stderr, "%s: violation: %s\n", file.c_str(), describe(*v).c_str());
        status = kViolation;
        continue;
      }
    }
    std::printf("%s: ok (click stream, detector %u, %zu events)\n", file.c_str(),
                static_cast<unsigned>(clicks.detector_id), clicks.events.size());
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"g2lab: Monte Carlo photon-statistics lab"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  std::string sim_output, det_output, input;

  auto* simulate = app.add_subcommand("simulate", "emit a photon stream to a PTS1 file");
  add_common(simulate, common, true);
  simulate->add_option("--workers", common.workers, "worker threads");
  simulate->add_option("--duration-s", common.duration_s, "override the config duration");
  simulate->add_option("-o,--output", sim_output, "output file")->default_val("photons.pts");

  auto* det = app.add_subcommand("detect", "photon stream -> click stream(s); HBT configs write _a/_b files");
  add_common(det, common, true);
  det->add_option("-i,--input", input, "photon stream (PTS1)")->required()->check(CLI::ExistingFile);
  det->add_option("-o,--output", det_output, "output file")->default_val("clicks.pts");

  CorrelateArgs corr;
  auto* correlate = app.add_subcommand("correlate", "click stream(s) -> normalized g2 curve (CSV)");
  add_common(correlate, common, false);
  correlate->add_option("-i,--input", corr.input, "click or photon stream (PTS1)")->required()->check(CLI::ExistingFile);
  correlate->add_option("--input-b", corr.input_b, "second channel for the cross estimator")->check(CLI::ExistingFile);
  correlate->add_option("-o,--output", corr.output, "output CSV");
  correlate->add_option("--estimator", corr.estimator, "all_pairs, start_stop_first or cross");
  correlate->add_option("--tau-min-ns", corr.tau_min_ns);
  correlate->add_option("--tau-max-ns", corr.tau_max_ns);
  correlate->add_option("--bin-width-ns", corr.bin_width_ns);
  correlate->add_flag("--rate-correction", corr.rate_correction, "undo the start-stop exp(-r tau) bias");
  correlate->add_flag("--no-fold", corr.no_fold, "keep both sides of a cross histogram");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit a g2 curve CSV");
  add_common(fit, common, false);
  fit->add_option("-i,--input", fa.input, "curve CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("-o,--output", fa.output, "output JSON");
  fit->add_option("--model", fa.model, "g2 or linear");
  fit->add_option("--tau-min-ns", fa.tau_min_ns);
  fit->add_option("--tau-max-ns", fa.tau_max_ns);
  fit->add_option("--k21-hz", fa.k21_hz, "fixed radiative rate for rate recovery");

  auto* pipeline = app.add_subcommand("pipeline", "simulate, detect, correlate, normalize and fit in one pass");
  add_common(pipeline, common, true);
  pipeline->add_option("--workers", common.workers, "worker threads");
  pipeline->add_option("--duration-s", common.duration_s, "override the config duration");

  std::vector<std::string> files;
  std::optional<double> dead_time_ns;
  auto* validate = app.add_subcommand("validate", "check config files and PTS1 streams");
  validate->add_option("files", files, "config or PTS1 files")->required();
  validate->add_option("--dead-time-ns", dead_time_ns, "also require this minimum click spacing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common, sim_output);
    if (det->parsed()) return cmd_detect(common, input, det_output);
    if (correlate->parsed()) return cmd_correlate(common, corr);
    if (fit->parsed()) return cmd_fit(common, fa);
    if (pipeline->parsed()) return cmd_pipeline(common);
    if (validate->parsed()) return cmd_validate(files, dead_time_ns);
  } catch (const Error& e) {
    std::fprintf(stderr, "g2lab: error %s: %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "g2lab: error E_INTERNAL: %s\n", e.what());
    return kInternal;
  }
  return kUsage;
}
