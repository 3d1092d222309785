#include "g2lab/emitters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace g2lab {

namespace {

constexpr double kSecondsPerTick = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::invalid_argument, what);
}

}  // namespace

void ThreeLevelParams::validate() const {
  for (double k : {k12, k21, k23, k31})
    require(std::isfinite(k) && k >= 0.0, "three-level rates must be finite and >= 0");
  require(k21 > 0.0, "three-level radiative rate k21 must be positive");
}

ThreeLevelParams ThreeLevelParams::nv_default() {
  return ThreeLevelParams{.k12 = 1e7, .k21 = 1.0 / 30e-9, .k23 = 2e6, .k31 = 1e6};
}

double steady_state_excited(const ThreeLevelParams& p) {
  p.validate();
  const double denom = p.k31 * (p.k12 + p.k21 + p.k23) + p.k12 * p.k23;
  if (denom == 0.0) return 0.0;
  return p.k12 * p.k31 / denom;
}

double eval_g2_ns(const G2Model& m, double tau_ns) {
  const double tau_s = tau_ns * 1e-9;
  return 1.0 - (1.0 + m.a) * std::exp(-m.lambda1 * tau_s) + m.a * std::exp(-m.lambda2 * tau_s);
}

double eval_g2(const G2Model& model, Tick tau) {
  return eval_g2_ns(model, to_ns(tau));
}

G2Model analytic_g2(const ThreeLevelParams& p) {
  p.validate();
  require(p.k12 > 0.0, "analytic g2 needs a positive pump rate k12");
  if (p.k23 == 0.0) return G2Model{0.0, p.k12 + p.k21, 0.0};
  require(p.k31 > 0.0, "metastable level without deshelving (k31 = 0) has no steady state");

  // d/dt (p2, p3) = M (p2, p3) + (k12, 0), with p1 eliminated.
  const double s = p.k12 + p.k21 + p.k23;
  const double trace = s + p.k31;
  const double det = s * p.k31 + p.k12 * p.k23;
  const double disc = (s - p.k31) * (s - p.k31) - 4.0 * p.k12 * p.k23;
  if (disc < 0.0)
    fail(ErrorCode::degenerate, "complex relaxation rates: g2 oscillates, no two-exponential form");
  const double lambda1 = 0.5 * (trace + std::sqrt(disc));
  const double lambda2 = det / lambda1;
  if (lambda1 - lambda2 <= 1e-12 * lambda1)
    fail(ErrorCode::degenerate, "degenerate relaxation rates (lambda1 == lambda2)");

  // Initial slope of p2 / p2_ss is k12 / p2_ss = det / k31.
  const double slope0 = det / p.k31;
  const double a = (slope0 - lambda1) / (lambda1 - lambda2);
  return G2Model{a, lambda1, lambda2};
}

void FockModeSpec::validate() const {
  require(n >= 1, "Fock modes need n >= 1");
  require(mode_duration.value() >= 1, "mode duration must be at least one tick");
  require(mode_duration.value() >= n, "mode duration must hold n distinct ticks");
}

PhotonStream simulate_poisson(double rate_hz, Tick duration, RngSeed seed) {
  require(std::isfinite(rate_hz) && rate_hz > 0.0, "Poisson rate must be positive");
  const double expected = rate_hz * to_seconds(duration);
  if (expected > 9.2233720368547758e18)
    fail(ErrorCode::overflow, "expected Poisson event count exceeds 2^63");

  PhotonStream out{{}, duration, "poisson"};
  out.events.reserve(static_cast<std::size_t>(expected + 6.0 * std::sqrt(expected) + 16.0));
  const double rate_per_tick = rate_hz * kSecondsPerTick;
  Rng rng(seed);
  // Exact arrival time = whole + frac; whole is kept in integer ticks so the
  // clock never loses precision over long runs.
  std::uint64_t whole = 0;
  double frac = 0.0;
  const std::uint64_t end = duration.value();
  while (true) {
    const double total = frac + rng.exponential(rate_per_tick);
    const double step = std::floor(total);
    if (step >= static_cast<double>(end - whole)) break;
    whole += static_cast<std::uint64_t>(step);
    frac = total - step;
    std::uint64_t t = whole + (frac >= 0.5 ? 1 : 0);
    if (!out.events.empty() && t <= out.events.back().value()) t = out.events.back().value() + 1;
    if (t >= end) break;
    out.events.emplace_back(t);
  }
  return out;
}

PhotonStream simulate_fock_modes(const FockModeSpec& spec, RngSeed seed) {
  spec.validate();
  const Tick duration = spec.mode_duration * spec.n_modes;
  PhotonStream out{{}, duration, "fock-n" + std::to_string(spec.n)};
  out.events.reserve(static_cast<std::size_t>(spec.n_modes) * spec.n);
  Rng rng(seed);
  std::vector<std::uint64_t> local;
  local.reserve(spec.n);
  const std::uint64_t width = spec.mode_duration.value();
  for (std::uint64_t mode = 0; mode < spec.n_modes; ++mode) {
    local.clear();
    for (std::uint32_t k = 0; k < spec.n; ++k) local.push_back(rng.below(width));
    std::sort(local.begin(), local.end());
    // Ties bump the later photon +1 tick; a run pushed past the mode end is
    // packed back against it, so every photon stays in its own mode.
    for (std::size_t k = 1; k < local.size(); ++k) local[k] = std::max(local[k], local[k - 1] + 1);
    for (std::size_t k = local.size(); k-- > 0;) {
      const std::uint64_t cap = k + 1 < local.size() ? local[k + 1] - 1 : width - 1;
      local[k] = std::min(local[k], cap);
    }
    const std::uint64_t base = mode * width;
    for (std::uint64_t t : local) out.events.emplace_back(base + t);
  }
  return out;
}

ThreeLevelRun simulate_three_level_run(const ThreeLevelParams& params, Tick duration,
                                       RngSeed seed) {
  params.validate();
  ThreeLevelRun run;
  run.photons = PhotonStream{{}, duration, "three-level"};
  if (params.k12 == 0.0) {
    run.time_in_state[0] = duration.value();
    return run;
  }
  const double exit_rate[3] = {params.k12 * kSecondsPerTick,
                               (params.k21 + params.k23) * kSecondsPerTick,
                               params.k31 * kSecondsPerTick};
  const double radiative_branch = params.k21 / (params.k21 + params.k23);
  const std::uint64_t end = duration.value();
  const double expected =
      steady_state_excited(params) * params.k21 * to_seconds(duration);
  run.photons.events.reserve(static_cast<std::size_t>(expected * 1.02 + 64.0));

  Rng rng(seed);
  int state = 0;
  std::uint64_t now = 0;
  while (now < end) {
    if (exit_rate[state] == 0.0) {
      run.time_in_state[state] += end - now;
      break;
    }
    const double wait = rng.exponential(exit_rate[state]);
    const double rounded = std::floor(wait + 0.5);
    std::uint64_t step = 1;
    if (rounded >= static_cast<double>(end - now)) {
      step = end - now;
    } else if (rounded >= 1.0) {
      step = static_cast<std::uint64_t>(rounded);
    }
    run.time_in_state[state] += std::min(step, end - now);
    if (step >= end - now) break;
    now += step;
    ++run.jumps;
    switch (state) {
      case 0: state = 1; break;
      case 1:
        if (rng.uniform() < radiative_branch) {
          state = 0;
          run.photons.events.emplace_back(now);
        } else {
          state = 2;
        }
        break;
      default: state = 0; break;
    }
  }
  return run;
}

PhotonStream simulate_three_level(const ThreeLevelParams& params, Tick duration, RngSeed seed) {
  return simulate_three_level_run(params, duration, seed).photons;
}

std::string source_label(const SourceSpec& source) {
  struct {
    std::string operator()(const PoissonSource&) const { return "poisson"; }
    std::string operator()(const FockSource& f) const { return "fock-n" + std::to_string(f.n); }
    std::string operator()(const ThreeLevelSource&) const { return "three-level"; }
  } visitor;
  return std::visit(visitor, source);
}

PhotonStream simulate_source(const SourceSpec& source, Tick duration, RngSeed seed) {
  if (const auto* p = std::get_if<PoissonSource>(&source))
    return simulate_poisson(p->rate_hz, duration, seed);
  if (const auto* f = std::get_if<FockSource>(&source)) {
    if (f->mode_duration.value() == 0 || duration.value() % f->mode_duration.value() != 0)
      fail(ErrorCode::invalid_argument, "Fock segment must span a whole number of modes");
    return simulate_fock_modes(
        FockModeSpec{f->n, f->mode_duration, duration.value() / f->mode_duration.value()}, seed);
  }
  const auto& t = std::get<ThreeLevelSource>(source);
  return simulate_three_level(t.params, duration, seed);
}

Tick align_segment_length(const SourceSpec& source, Tick requested) {
  if (const auto* f = std::get_if<FockSource>(&source)) {
    const std::uint64_t modes = std::max<std::uint64_t>(1, requested.value() / f->mode_duration.value());
    return f->mode_duration * modes;
  }
  return requested;
}

PhotonStream simulate_segmented(const SourceSpec& source, const SegmentPlan& plan, RngSeed seed,
                                unsigned workers) {
  const auto segments = map_segments(plan.count(), workers, [&](std::size_t k) {
    return simulate_source(source, plan.duration(k), seed.child(k));
  });
  return concat_segments(segments, source_label(source));
}

}  // namespace g2lab
