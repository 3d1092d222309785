#include <cmath>
#include <set>

#include "doctest.h"
#include "g2lab/random.hpp"

using namespace g2lab;

TEST_CASE("philox4x32-10 known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("equal seeds replay, distinct streams differ") {
  Rng a({42, 7}), b({42, 7}), c({42, 8});
  int differ = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differ += x != c.next_u64();
  }
  CHECK(differ == 1000);
}

TEST_CASE("child streams are deterministic and distinct") {
  const RngSeed root{1, 0};
  CHECK(root.child(3) == root.child(3));
  std::set<std::uint64_t> ids;
  for (std::uint64_t k = 0; k < 10000; ++k) ids.insert(root.child(k).stream_id);
  CHECK(ids.size() == 10000);
  CHECK(root.child(0).child(1) != root.child(1).child(0));
}

TEST_CASE("independent sub-streams are uncorrelated") {
  Rng x(RngSeed{9, 0}.child(0)), y(RngSeed{9, 0}.child(1));
  const int n = 200000;
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double u = x.uniform(), v = y.uniform();
    sx += u; sy += v; sxy += u * v; sxx += u * u; syy += v * v;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(std::fabs(corr) < 4.0 / std::sqrt(n));
}

TEST_CASE("distributions: ranges and moments") {
  Rng rng({5, 5});
  const int n = 400000;
  double mean_u = 0, mean_e = 0, mean_z = 0, var_z = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double o = rng.uniform_open();
    REQUIRE(o > 0.0);
    REQUIRE(o < 1.0);
    mean_u += u;
    mean_e += rng.exponential(2.0);
    const double z = rng.normal();
    mean_z += z;
    var_z += z * z;
  }
  CHECK(mean_u / n == doctest::Approx(0.5).epsilon(5 * std::sqrt(1.0 / 12 / n) / 0.5));
  CHECK(std::fabs(mean_e / n - 0.5) < 5 * 0.5 / std::sqrt(n));
  CHECK(std::fabs(mean_z / n) < 5.0 / std::sqrt(n));
  CHECK(std::fabs(var_z / n - 1.0) < 5 * std::sqrt(2.0 / n));
}

TEST_CASE("below() covers the range uniformly") {
  Rng rng({3, 1});
  std::array<int, 7> hist{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++hist[rng.below(7)];
  for (int h : hist) CHECK(std::abs(h - n / 7) < 5 * std::sqrt(n / 7.0));
}
