#include <cmath>
#include <numeric>

#include "doctest.h"
#include "g2lab/correlation.hpp"
#include "g2lab/detectors.hpp"
#include "g2lab/emitters.hpp"
#include "oracles.hpp"

using namespace g2lab;

namespace {

std::vector<Tick> ns_list(std::initializer_list<std::uint64_t> v) {
  std::vector<Tick> out;
  for (auto x : v) out.push_back(ns(x));
  return out;
}

std::vector<std::uint64_t> nonzero_bins(const CorrelationHistogram& h) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    for (std::uint64_t k = 0; k < h.counts[i]; ++k) out.push_back(i);
  return out;
}

std::vector<Tick> random_stream(std::size_t n, std::uint64_t span, std::uint64_t key) {
  Rng rng({key, 0});
  std::vector<Tick> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back(Tick(rng.below(span)));
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace

TEST_CASE("geometry") {
  const HistogramGeometry g{delay_ns(5), delay_ns(200), delay_ns(5)};
  CHECK(g.bins() == 39);
  CHECK(g.bin_lower(0) == delay_ns(5));
  CHECK(g.bin_center(0) == Delay(7500));
  CHECK_THROWS_AS((HistogramGeometry{Delay(0), Delay(10), Delay(3)}.validate()), Error);
  CHECK_THROWS_AS((HistogramGeometry{Delay(10), Delay(10), Delay(1)}.validate()), Error);
  CHECK_THROWS_AS((HistogramGeometry{Delay(0), Delay(10), Delay(0)}.validate()), Error);
  CHECK(parse_correlation_mode("all_pairs") == CorrelationMode::all_pairs_forward);
  CHECK(parse_correlation_mode("start_stop_first") == CorrelationMode::start_stop_first);
  CHECK(parse_correlation_mode("cross") == CorrelationMode::cross_two_channel);
  CHECK_FALSE(parse_correlation_mode("auto").has_value());
}

TEST_CASE("all-pairs worked example") {
  const auto t = ns_list({0, 3, 8});
  const auto h = correlate_all_pairs(t, ns(10), {Delay(0), delay_ns(10), delay_ns(1)});
  CHECK(nonzero_bins(h) == std::vector<std::uint64_t>{3, 5, 8});
  CHECK(h.n_start_events == 3);
  CHECK(h.n_stop_events == 3);
}

TEST_CASE("start-stop worked example") {
  const auto t = ns_list({0, 100, 300});
  const auto h = start_stop_first(t, ns(400), {Delay(0), delay_ns(400), delay_ns(100)});
  CHECK(h.counts == std::vector<std::uint64_t>{0, 1, 1, 0});
  CHECK(h.mode == CorrelationMode::start_stop_first);
  // All-pairs would also count the 300 ns pair.
  const auto all = correlate_all_pairs(t, ns(400), {Delay(0), delay_ns(400), delay_ns(100)});
  CHECK(all.counts == std::vector<std::uint64_t>{0, 1, 1, 1});
}

TEST_CASE("cross worked example") {
  const auto h = correlate_cross(ns_list({10}), ns_list({15}), ns(20), delay_ns(10), delay_ns(1));
  CHECK(h.geometry.tau_min == delay_ns(-10));
  CHECK(nonzero_bins(h) == std::vector<std::uint64_t>{15});
  const auto back = correlate_cross(ns_list({15}), ns_list({10}), ns(20), delay_ns(10), delay_ns(1));
  CHECK(nonzero_bins(back) == std::vector<std::uint64_t>{5});
  const auto f = fold_cross(h);
  CHECK(f.geometry.tau_min == Delay(0));
  CHECK(f.counts[5] == 1);
  CHECK(f.n_start_events == 2);
}

TEST_CASE("fast estimators equal brute force") {
  for (std::uint64_t k = 0; k < 10; ++k) {
    CAPTURE(k);
    const auto t = random_stream(2000, 2'000'000, k);
    const auto u = random_stream(1500, 2'000'000, k + 100);
    const HistogramGeometry g{Delay(700), Delay(40'700), Delay(400)};
    CHECK(correlate_all_pairs(t, Tick(2'000'000), g).counts ==
          oracle::brute_all_pairs(t, 700, 40'700, 400));
    CHECK(start_stop_first(t, Tick(2'000'000), g).counts ==
          oracle::brute_start_stop(t, 700, 40'700, 400));
    CHECK(correlate_cross(t, u, Tick(2'000'000), Delay(30'000), Delay(500)).counts ==
          oracle::brute_cross(t, u, 30'000, 500));
  }
}

TEST_CASE("cross of a stream with itself contains the forward pairs and zero delay") {
  const auto t = random_stream(1000, 1'000'000, 7);
  const auto cross = correlate_cross(t, t, Tick(1'000'000), Delay(20'000), Delay(1000));
  const auto autoc = correlate_all_pairs(t, Tick(1'000'000), {Delay(0), Delay(20'000), Delay(1000)});
  CHECK(cross.counts[20] == t.size() + autoc.counts[0]);
  for (std::size_t i = 1; i < autoc.counts.size(); ++i) CHECK(cross.counts[20 + i] == autoc.counts[i]);
  // Negative side holds the same pairs with |tau| in (0, tau_max].
  const auto mirrored = oracle::brute_all_pairs(t, 1, 20'001, 20'000);
  CHECK(std::accumulate(cross.counts.begin(), cross.counts.begin() + 20, std::uint64_t{0}) == mirrored[0]);
}

TEST_CASE("segment histograms merge to the whole-stream histogram") {
  const auto t = random_stream(5000, 10'000'000, 9);
  const Tick total(10'000'000), half(5'000'000);
  const HistogramGeometry g{Delay(0), Delay(50'000), Delay(1000)};
  const auto whole = correlate_all_pairs(t, total, g);

  // First half sees the next tau_max of events as stops only.
  const auto split = std::lower_bound(t.begin(), t.end(), half);
  const auto margin = std::lower_bound(t.begin(), t.end(), half + Tick(50'000));
  const auto h1 = correlate_all_pairs(std::span<const Tick>(&*t.begin(), margin - t.begin()), total, g, half);
  std::vector<Tick> second;
  for (auto it = split; it != t.end(); ++it) second.push_back(*it - half);
  const auto h2 = correlate_all_pairs(second, total - half, g);
  const auto merged = merge_histograms(h1, h2);
  CHECK(merged.counts == whole.counts);
  CHECK(merged.n_start_events == whole.n_start_events);
  CHECK(merged.n_stop_events == whole.n_stop_events);
  CHECK(merged.total_duration == whole.total_duration);
}

TEST_CASE("merge is commutative and associative") {
  const HistogramGeometry g{Delay(0), Delay(10'000), Delay(500)};
  std::vector<CorrelationHistogram> hs;
  for (std::uint64_t k = 0; k < 3; ++k)
    hs.push_back(correlate_all_pairs(random_stream(800, 400'000, 20 + k), Tick(400'000), g));
  CHECK(merge_histograms(hs[0], hs[1]) == merge_histograms(hs[1], hs[0]));
  CHECK(merge_histograms(merge_histograms(hs[0], hs[1]), hs[2]) ==
        merge_histograms(hs[0], merge_histograms(hs[1], hs[2])));

  const auto other = correlate_all_pairs(random_stream(10, 400'000, 1), Tick(400'000),
                                         {Delay(0), Delay(10'000), Delay(1000)});
  try {
    merge_histograms(hs[0], other);
    FAIL("expected geometry mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::geometry_mismatch);
  }
  const auto ss = start_stop_first(random_stream(10, 400'000, 2), Tick(400'000), g);
  CHECK_THROWS_AS(merge_histograms(hs[0], ss), Error);
}

TEST_CASE("cross requires matching durations") {
  ClickStream a{ns_list({1}), {ClickOrigin::photon}, ns(10), 0};
  ClickStream b{ns_list({2}), {ClickOrigin::photon}, ns(20), 1};
  try {
    correlate_cross(a, b, delay_ns(5), delay_ns(1));
    FAIL("expected duration mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duration_mismatch);
  }
}

TEST_CASE("normalization") {
  const auto t = ns_list({0, 3, 8});
  const auto h = correlate_all_pairs(t, ns(10), {Delay(0), delay_ns(10), delay_ns(1)});
  const auto c = normalize_g2(h);
  // 3 starts, 0.3 clicks/ns, 1 ns bins: one count is g2 = 1/0.9.
  CHECK(c.g2[3] == doctest::Approx(1.0 / 0.9));
  CHECK(c.g2_err[3] == doctest::Approx(1.0 / 0.9));
  CHECK(c.g2[0] == 0.0);
  CHECK(c.g2_err[0] == 0.0);
  CHECK(c.scale[0] == doctest::Approx(1.0 / 0.9));
  CHECK(std::isinf(c.relative_error(0)));
  CHECK(c.tau_ns(3) == doctest::Approx(3.5));
  CHECK(c.slice(2.0, 4.0).size() == 2);

  const auto empty = correlate_all_pairs(std::vector<Tick>{}, ns(10), {Delay(0), delay_ns(10), delay_ns(1)});
  try {
    normalize_g2(empty);
    FAIL("expected degenerate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate);
  }
}

TEST_CASE("start-stop rate correction restores a flat Poisson curve") {
  const double rate = 3e6;
  const auto s = simulate_poisson(rate, ticks_from_seconds(1.0), {30, 0});
  const HistogramGeometry g{Delay(0), delay_ns(500), delay_ns(25)};
  const auto h = start_stop_first(s.events, s.duration, g);
  const auto raw = normalize_g2(h);
  const auto fixed = normalize_g2(h, true);
  CHECK(fixed.rate_corrected);
  // Uncorrected: exp(-r tau) decay.
  CHECK(raw.g2.back() < 0.3);
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    // Within-bin curvature of exp(-r tau): (r w)^2 / 24 ~ 2.3e-4.
    CHECK(std::fabs(fixed.g2[i] - 1.0) < 3 * fixed.g2_err[i] + 5e-4);
  }
  // Only start-stop curves take the correction.
  CHECK_FALSE(normalize_g2(correlate_all_pairs(s.events, s.duration, g), true).rate_corrected);
}

TEST_CASE("Poisson all-pairs g2 is flat within errors") {
  const auto s = simulate_poisson(3e6, ticks_from_seconds(1.0), {31, 0});
  const auto c = normalize_g2(correlate_all_pairs(s.events, s.duration, {delay_ns(5), delay_ns(200), delay_ns(5)}));
  int ok = 0;
  for (std::size_t i = 0; i < c.size(); ++i) ok += std::fabs(c.g2[i] - 1.0) < 3 * c.g2_err[i];
  CHECK(ok >= static_cast<int>(0.95 * static_cast<double>(c.size())));
}
