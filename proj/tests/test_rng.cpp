#include "doctest.h"

#include <cmath>
#include <vector>

#include "nusest/rng.hpp"
#include "oracles.hpp"

using nusest::RngDomain;
using nusest::StreamRng;

TEST_CASE("identical stream keys reproduce identical sequences") {
  StreamRng a(42, RngDomain::channel, 7);
  StreamRng b(42, RngDomain::channel, 7);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform01() == b.uniform01());
  }
}

TEST_CASE("streams with different indices or domains differ") {
  StreamRng a(42, RngDomain::channel, 0);
  StreamRng b(42, RngDomain::channel, 1);
  StreamRng c(42, RngDomain::noise, 0);
  int diff_ab = 0;
  int diff_ac = 0;
  for (int i = 0; i < 16; ++i) {
    const double va = a.uniform01();
    if (va != b.uniform01()) ++diff_ab;
    if (va != c.uniform01()) ++diff_ac;
  }
  CHECK(diff_ab > 12);
  CHECK(diff_ac > 12);
}

TEST_CASE("uniform01 stays in [0, 1) with mean 1/2") {
  StreamRng rng(1, RngDomain::noise, 3);
  oracles::Welford stats;
  for (int i = 0; i < 200000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    stats.add(u);
  }
  CHECK(std::abs(stats.mean - 0.5) < 0.005);
  CHECK(std::abs(stats.variance() - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal sampler moments") {
  StreamRng rng(5, RngDomain::noise, 0);
  oracles::Welford stats;
  for (int i = 0; i < 200000; ++i) {
    stats.add(rng.normal());
  }
  CHECK(std::abs(stats.mean) < 0.01);
  CHECK(std::abs(stats.variance() - 1.0) < 0.02);
}

TEST_CASE("complex normal has the requested total variance and circularity") {
  StreamRng rng(5, RngDomain::noise, 1);
  const double target = 0.37;
  oracles::Welford re;
  oracles::Welford im;
  double cross = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = rng.complex_normal(target);
    re.add(z.real());
    im.add(z.imag());
    cross += z.real() * z.imag();
  }
  CHECK(re.variance() == doctest::Approx(target / 2).epsilon(0.03));
  CHECK(im.variance() == doctest::Approx(target / 2).epsilon(0.03));
  CHECK(std::abs(cross / n) < 5.0 * target / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("poisson sampler mean and variance") {
  StreamRng rng(9, RngDomain::channel, 2);
  oracles::Welford stats;
  for (int i = 0; i < 200000; ++i) {
    stats.add(static_cast<double>(rng.poisson(9.0)));
  }
  CHECK(stats.mean == doctest::Approx(9.0).epsilon(0.01));
  CHECK(stats.variance() == doctest::Approx(9.0).epsilon(0.03));
}

TEST_CASE("poisson chunk splitting keeps the mean for large rates") {
  StreamRng rng(9, RngDomain::channel, 3);
  oracles::Welford stats;
  for (int i = 0; i < 20000; ++i) {
    stats.add(static_cast<double>(rng.poisson(130.0)));
  }
  CHECK(stats.mean == doctest::Approx(130.0).epsilon(0.01));
  CHECK(stats.variance() == doctest::Approx(130.0).epsilon(0.05));
}

TEST_CASE("poisson of a zero-ish rate is zero") {
  StreamRng rng(9, RngDomain::channel, 4);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.poisson(1e-12) == 0);
  }
}
