#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "qpcpd/random.hpp"

TEST_CASE("sub-seeds are stable and tag dependent") {
  // FNV-1a 64 reference values
  STATIC_REQUIRE(qpcpd::fnv1a64("") == 0xcbf29ce484222325ULL);
  STATIC_REQUIRE(qpcpd::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(qpcpd::sub_seed(1, "photons") != qpcpd::sub_seed(1, "capture"));
  CHECK(qpcpd::sub_seed(1, "photons") != qpcpd::sub_seed(2, "photons"));
  CHECK(qpcpd::sub_seed(7, "noise") == qpcpd::sub_seed(7, "noise"));
}

TEST_CASE("same seed gives the same stream") {
  qpcpd::Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs = differs || x != c.uniform();
  }
  CHECK(differs);
}

TEST_CASE("uniform variates stay in range") {
  qpcpd::Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = rng.uniform_open_low();
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("index covers the range without bias") {
  qpcpd::Rng rng(11);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) ++counts[rng.index(7)];
  for (int c : counts) {
    // binomial sd ~ 93
    CHECK(std::abs(c - 10000) < 500);
  }
  CHECK_THROWS_AS(rng.index(0), std::domain_error);
}

TEST_CASE("exponential and normal moments") {
  qpcpd::Rng rng(5);
  const int n = 200000;
  double se = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    se += rng.exponential(0.25);
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(se / n - 4.0) < 0.05);
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(std::abs(sn2 / n - 1.0) < 0.02);
  CHECK_THROWS_AS(rng.exponential(0.0), std::domain_error);
}
