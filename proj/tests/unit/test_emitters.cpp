#include <cmath>

#include "doctest.h"
#include "g2lab/correlation.hpp"
#include "g2lab/emitters.hpp"
#include "oracles.hpp"

using namespace g2lab;

namespace {

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - m) * (v - m);
  var /= static_cast<double>(x.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(x.size()))};
}

double fraction_within(const G2Curve& c, const G2Model& m, double k_sigma) {
  int ok = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double sigma = c.counts[i] > 0 ? c.g2_err[i] : c.scale[i];
    ok += std::fabs(c.g2[i] - eval_g2_ns(m, c.tau_ns(i))) <= k_sigma * sigma;
  }
  return static_cast<double>(ok) / static_cast<double>(c.size());
}

}  // namespace

TEST_CASE("Poisson source: count at 300 kcps over 100 s") {
  const auto s = simulate_poisson(300'000.0, ticks_from_seconds(100.0), {2011, 0});
  const double expected = 3e7;
  CHECK(std::fabs(static_cast<double>(s.events.size()) - expected) < 3 * std::sqrt(expected));
  CHECK_FALSE(validate_stream(s).has_value());
}

TEST_CASE("Poisson source: trivial and error cases") {
  CHECK(simulate_poisson(1e6, Tick(0), {1, 0}).events.empty());
  CHECK_THROWS_AS(simulate_poisson(0.0, Tick(10), {1, 0}), Error);
  CHECK_THROWS_AS(simulate_poisson(1e12, Tick::max(), {1, 0}), Error);
  CHECK(simulate_poisson(1e5, ns(1'000'000), {4, 4}) == simulate_poisson(1e5, ns(1'000'000), {4, 4}));
}

TEST_CASE("Poisson inter-arrival times pass a KS test against the exponential CDF") {
  const double rate = 1e6;
  const auto s = simulate_poisson(rate, ticks_from_seconds(1.01), {77, 3});
  REQUIRE(s.events.size() > 1'000'000);
  std::vector<double> gaps;
  gaps.reserve(1'000'000);
  for (std::size_t i = 1; i <= 1'000'000; ++i)
    gaps.push_back(static_cast<double>((s.events[i] - s.events[i - 1]).value()));
  const double d = oracle::ks_exponential(gaps, rate * 1e-12);
  CHECK(d < 1.628 / std::sqrt(1e6));
}

TEST_CASE("coherent light has flat g2") {
  const auto s = simulate_poisson(1e6, ticks_from_seconds(2.0), {8, 8});
  const auto curve =
      normalize_g2(correlate_all_pairs(s.events, s.duration, {Delay(0), delay_ns(200), delay_ns(20)}));
  for (std::size_t i = 0; i < curve.size(); ++i) CHECK(std::fabs(curve.g2[i] - 1.0) < 3 * curve.g2_err[i]);
}

TEST_CASE("Fock modes: exactly n photons per mode") {
  const FockModeSpec spec{3, Tick(50), 1000};
  const auto s = simulate_fock_modes(spec, {5, 0});
  CHECK(s.duration == Tick(50'000));
  REQUIRE(s.events.size() == 3000);
  CHECK_FALSE(validate_stream(s).has_value());
  for (std::uint64_t m = 0; m < 1000; ++m)
    CHECK(std::count_if(s.events.begin(), s.events.end(),
                        [&](Tick t) { return t.value() / 50 == m; }) == 3);
  // Crowded modes: collisions stay inside the mode.
  const auto tight = simulate_fock_modes({4, Tick(5), 2000}, {6, 0});
  CHECK_FALSE(validate_stream(tight).has_value());
  for (std::size_t i = 0; i < tight.events.size(); ++i) CHECK(tight.events[i].value() / 5 == i / 4);
  const auto full = simulate_fock_modes({3, Tick(3), 10}, {6, 1});
  for (std::size_t i = 0; i < full.events.size(); ++i) CHECK(full.events[i] == Tick(i));
  CHECK_THROWS_AS(simulate_fock_modes({0, Tick(10), 1}, {1, 0}), Error);
  CHECK_THROWS_AS(simulate_fock_modes({4, Tick(3), 1}, {1, 0}), Error);
}

TEST_CASE("Fock modes: g2 at short delay is 1 - 1/n") {
  const Tick width = ns(30);
  for (unsigned n : {1u, 2u, 3u}) {
    CAPTURE(n);
    const auto s = simulate_fock_modes({n, width, 200'000}, {31, n});
    const auto c = normalize_g2(correlate_all_pairs(s.events, s.duration, {Delay(0), Delay(300), Delay(30)}));
    const double sigma = std::max(c.g2_err[0], c.scale[0]);
    CHECK(std::fabs(c.g2[0] - (1.0 - 1.0 / n)) < 3 * sigma + 0.5 * 30.0 / 30'000.0);
  }
}

TEST_CASE("Fock modes: n = 3 pair-delay law over a full mode") {
  const Tick width = ns(30);
  const auto s = simulate_fock_modes({3, width, 300'000}, {32, 0});
  const HistogramGeometry g{Delay(0), delay_ns(30), delay_ns(1)};
  const auto c = normalize_g2(correlate_all_pairs(s.events, s.duration, g));
  int ok = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    ok += std::fabs(c.g2[i] - oracle::fock_g2(3, c.tau_ns(i) / 30.0)) < 3 * c.g2_err[i];
  CHECK(ok >= static_cast<int>(0.95 * static_cast<double>(c.size())));

  // The oracle itself, checked by brute-force pair counting on a small stream.
  const auto small = simulate_fock_modes({3, width, 20'000}, {33, 0});
  const auto brute = oracle::brute_all_pairs(
      std::vector<Tick>(small.events.begin(), small.events.begin() + 3000), 0, 30'000, 3'000);
  const auto fast = correlate_all_pairs(
      std::span<const Tick>(small.events.data(), 3000), small.duration, {Delay(0), delay_ns(30), delay_ns(3)});
  CHECK(fast.counts == brute);
}

TEST_CASE("three-level: no pump, no photons") {
  auto p = ThreeLevelParams::nv_default();
  p.k12 = 0;
  const auto run = simulate_three_level_run(p, ns(1000), {1, 0});
  CHECK(run.photons.events.empty());
  CHECK(run.time_in_state[0] == ns(1000).value());
}

TEST_CASE("three-level: two-level limit photon rate") {
  const ThreeLevelParams p{.k12 = 1e6, .k21 = 1.0 / 30e-9, .k23 = 0.0, .k31 = 0.0};
  std::vector<double> rates;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto s = simulate_three_level(p, ticks_from_seconds(0.05), RngSeed{12, 0}.child(k));
    rates.push_back(static_cast<double>(s.events.size()) / 0.05);
  }
  const auto est = mean_se(rates);
  const double oracle_rate = p.k12 * p.k21 / (p.k12 + p.k21);
  CHECK(std::fabs(est.mean - oracle_rate) < 3 * est.se);
}

TEST_CASE("three-level default preset: rate and occupancy match the steady state") {
  const auto p = ThreeLevelParams::nv_default();
  const double p2 = oracle::steady_excited_linear_algebra(p);
  CHECK(steady_state_excited(p) == doctest::Approx(p2).epsilon(1e-12));
  std::vector<double> rates, occupancy;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto run = simulate_three_level_run(p, ticks_from_seconds(0.02), RngSeed{13, 0}.child(k));
    rates.push_back(static_cast<double>(run.photons.events.size()) / 0.02);
    occupancy.push_back(static_cast<double>(run.time_in_state[1]) / 0.02e12);
    CHECK(run.time_in_state[0] + run.time_in_state[1] + run.time_in_state[2] == 20'000'000'000ull);
  }
  const auto r = mean_se(rates);
  const auto o = mean_se(occupancy);
  CHECK(std::fabs(r.mean - p.k21 * p2) < 3 * r.se);
  CHECK(std::fabs(o.mean - p2) < 3 * o.se);
}

TEST_CASE("analytic g2: boundary values and the two-level limit") {
  const auto m = analytic_g2(ThreeLevelParams::nv_default());
  CHECK(std::fabs(eval_g2(m, Tick(0))) < 1e-15);
  CHECK(eval_g2(m, ticks_from_seconds(1e-3)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.a > 0);
  CHECK(m.lambda1 > m.lambda2);
  CHECK(m.lambda2 > 0);

  const ThreeLevelParams two{.k12 = 2e7, .k21 = 3e7, .k23 = 0.0, .k31 = 5e5};
  const auto m2 = analytic_g2(two);
  CHECK(m2.a == 0.0);
  CHECK(m2.lambda1 == doctest::Approx(5e7));
  for (double tau : {1.0, 10.0, 100.0})
    CHECK(eval_g2_ns(m2, tau) == doctest::Approx(oracle::g2_matrix_exponential(two, tau)).epsilon(1e-9));

  const G2Model pure{0.0, 1e8, 0.0};
  CHECK(eval_g2(pure, Tick(0)) == 0.0);
}

TEST_CASE("analytic g2 matches the matrix exponential at 100 log-spaced delays") {
  const ThreeLevelParams generic{.k12 = 2.3e7, .k21 = 4.1e7, .k23 = 5.5e6, .k31 = 7.0e5};
  const auto m = analytic_g2(generic);
  for (int i = 0; i < 100; ++i) {
    const double tau = 0.01 * std::pow(1e6, i / 99.0);  // 10 ps .. 10 us
    const double want = oracle::g2_matrix_exponential(generic, tau);
    CHECK(std::fabs(eval_g2_ns(m, tau) - want) <= 1e-9 * std::fabs(want));
  }
  CHECK(std::fabs(eval_g2(m, ns(30)) - oracle::g2_matrix_exponential(generic, 30.0)) <=
        1e-9 * oracle::g2_matrix_exponential(generic, 30.0));
}

TEST_CASE("analytic g2: degenerate and invalid parameters") {
  // (k12 + k21 + k23 - k31)^2 == 4 k12 k23 gives a double root.
  const ThreeLevelParams degenerate{.k12 = 1e7, .k21 = 1e7, .k23 = 1e7, .k31 = 1e7};
  try {
    analytic_g2(degenerate);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate);
  }
  const ThreeLevelParams complex_rates{.k12 = 1e7, .k21 = 1e7, .k23 = 1e7, .k31 = 3e7};
  CHECK_THROWS_AS(analytic_g2(complex_rates), Error);
  CHECK_THROWS_AS(analytic_g2({.k12 = 0.0, .k21 = 1e7, .k23 = 0.0, .k31 = 0.0}), Error);
  CHECK_THROWS_AS(analytic_g2({.k12 = 1e7, .k21 = 0.0, .k23 = 0.0, .k31 = 0.0}), Error);
  CHECK_THROWS_AS(analytic_g2({.k12 = 1e7, .k21 = 1e7, .k23 = -1.0, .k31 = 0.0}), Error);
}

TEST_CASE("simulated three-level g2 follows the analytic model") {
  const auto p = ThreeLevelParams::nv_default();
  const auto s = simulate_three_level(p, ticks_from_seconds(2.0), {21, 0});
  const auto c =
      normalize_g2(correlate_all_pairs(s.events, s.duration, {Delay(0), delay_ns(200), delay_ns(2)}));
  CHECK(fraction_within(c, analytic_g2(p), 3.0) >= 0.95);
}

TEST_CASE("segmented simulation is independent of the worker count") {
  const SourceSpec src = ThreeLevelSource{ThreeLevelParams::nv_default()};
  const SegmentPlan plan{ns(5'000'000), ns(400'000)};
  const auto serial = simulate_segmented(src, plan, {3, 3}, 1);
  const auto parallel = simulate_segmented(src, plan, {3, 3}, 4);
  CHECK(serial == parallel);
  CHECK(serial.duration == ns(5'000'000));
  CHECK_FALSE(validate_stream(serial).has_value());

  const SourceSpec fock = FockSource{2, ns(30)};
  CHECK(align_segment_length(fock, ns(100)) == ns(90));
  const auto f = simulate_segmented(fock, {ns(3000), ns(90)}, {1, 1}, 3);
  CHECK(f.events.size() == 200);
}
