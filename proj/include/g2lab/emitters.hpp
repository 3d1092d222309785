#pragma once

#include <array>
#include <cstdint>
#include <variant>

#include "g2lab/random.hpp"
#include "g2lab/segments.hpp"
#include "g2lab/stream.hpp"

namespace g2lab {

/// Rates of the ground (1) / excited (2) / metastable (3) rate-equation model,
/// all in s^-1.
struct ThreeLevelParams {
  double k12 = 0.0;  ///< pump, 1 -> 2
  double k21 = 0.0;  ///< radiative decay, 2 -> 1 (= 1 / excited-state lifetime)
  double k23 = 0.0;  ///< intersystem crossing into the metastable level
  double k31 = 0.0;  ///< deshelving back to ground

  /// Throws ErrorCode::invalid_argument unless all rates are finite, >= 0 and k21 > 0.
  void validate() const;

  /// N-V preset: 30 ns lifetime plus a shelving state that gives a visible
  /// bunching shoulder. k12 = 0.01/ns, k23 = 0.002/ns, k31 = 0.001/ns.
  static ThreeLevelParams nv_default();

  friend bool operator==(const ThreeLevelParams&, const ThreeLevelParams&) = default;
};

/// Analytic excited-state occupancy in steady state.
double steady_state_excited(const ThreeLevelParams& p);

/// g2(tau) = 1 - (1 + a) exp(-lambda1 tau) + a exp(-lambda2 tau); rates in s^-1.
struct G2Model {
  double a = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  friend bool operator==(const G2Model&, const G2Model&) = default;
};

double eval_g2(const G2Model& model, Tick tau);
/// Same closed form at a fractional delay in nanoseconds (tau >= 0).
double eval_g2_ns(const G2Model& model, double tau_ns);

/// Solves the post-detection relaxation of the rate equations. Throws
/// ErrorCode::degenerate when the two relaxation rates coincide and
/// ErrorCode::invalid_argument when k12 == 0.
G2Model analytic_g2(const ThreeLevelParams& params);

struct FockModeSpec {
  std::uint32_t n = 1;
  Tick mode_duration{1};
  std::uint64_t n_modes = 0;

  void validate() const;
};

PhotonStream simulate_poisson(double rate_hz, Tick duration, RngSeed seed);

/// Exactly `n` photons per mode at independent uniform ticks; ties are bumped
/// +1 tick without leaving the mode (needs mode_duration >= n).
PhotonStream simulate_fock_modes(const FockModeSpec& spec, RngSeed seed);

struct ThreeLevelRun {
  PhotonStream photons;
  /// Ticks spent in ground, excited, metastable (index 0..2).
  std::array<std::uint64_t, 3> time_in_state{};
  std::uint64_t jumps = 0;
};

/// Markov jump simulation starting in the ground state; one photon per 2 -> 1 jump.
ThreeLevelRun simulate_three_level_run(const ThreeLevelParams& params, Tick duration,
                                       RngSeed seed);
PhotonStream simulate_three_level(const ThreeLevelParams& params, Tick duration,
                                  RngSeed seed);

struct PoissonSource {
  double rate_hz = 0.0;
};
struct FockSource {
  std::uint32_t n = 1;
  Tick mode_duration{1};
};
struct ThreeLevelSource {
  ThreeLevelParams params;
};
using SourceSpec = std::variant<PoissonSource, FockSource, ThreeLevelSource>;

std::string source_label(const SourceSpec& source);

/// One independent segment of the given source on local time [0, duration).
/// For Fock sources the duration must be a whole number of modes.
PhotonStream simulate_source(const SourceSpec& source, Tick duration, RngSeed seed);

/// Segment length compatible with the source (Fock segments are rounded down
/// to whole modes, at least one).
Tick align_segment_length(const SourceSpec& source, Tick requested);

/// Simulates the plan's segments on independent sub-streams seed.child(k) and
/// concatenates them. Identical output for every worker count.
PhotonStream simulate_segmented(const SourceSpec& source, const SegmentPlan& plan,
                                RngSeed seed, unsigned workers = 1);

}  // namespace g2lab
