#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mirrorwm/mirror.hpp"
#include "mirrorwm/rng.hpp"
#include "mirrorwm/stats.hpp"

using namespace mirrorwm;

TEST_CASE("pivot values") {
  CHECK(pivot(1, 1) == 0.25);  // dyadic, exact in double
  CHECK(pivot(2, 0) == 0.0);
  CHECK(pivot(3, 7) == 7.0 / 16.0);
  CHECK_THROWS_AS(pivot(2, 4), std::invalid_argument);
  CHECK_THROWS_AS(pivot(2, -1), std::invalid_argument);
}

TEST_CASE("mirror reflects about the pivot mod 1") {
  CHECK(mirror(0.2, 1, 0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(mirror(0.2, 1, 1) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(mirror(0.2, 2, 1) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK_THROWS_AS(mirror(1.0, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(mirror(-0.1, 1, 0), std::invalid_argument);
}

TEST_CASE("mirror is an involution") {
  SplitMix rng(11);
  for (int m = 1; m <= 6; ++m) {
    for (int sym = 0; sym < (1 << m); ++sym) {
      for (int i = 0; i < 50; ++i) {
        const double u = rng.next_uniform();
        CHECK(mirror(mirror(u, m, sym), m, sym) == doctest::Approx(u).epsilon(1e-15));
      }
    }
  }
  // exact zero stays inside [0,1)
  for (int sym = 0; sym < 4; ++sym) {
    const double v = mirror(0.0, 2, sym);
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("one-bit mirror is the complementary pair") {
  CHECK(mirror_1bit(0.2, 0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(mirror_1bit(0.2, 1) == 0.2);
  SplitMix rng(5);
  for (int i = 0; i < 100; ++i) {
    const double u = rng.next_uniform();
    CHECK(mirror_1bit(u, 0) + mirror_1bit(u, 1) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(mirror_1bit(0.2, 2), std::invalid_argument);
}

TEST_CASE("mirror_for dispatches on m") {
  // m = 1 uses the complementary form: bit 1 is the identity
  CHECK(mirror_for(0.2, 1, 0) == mirror_1bit(0.2, 0));
  CHECK(mirror_for(0.2, 1, 1) == 0.2);
  // m >= 2 uses the grid reflection
  CHECK(mirror_for(0.2, 2, 1) == mirror(0.2, 2, 1));
}

TEST_CASE("circular shift identity") {
  CHECK(shift_identity_residual(0.37, 3, 2, 2) == 0.0);
  CHECK(shift_identity_residual(0.0, 3, 1, 6) < 1e-12);

  SplitMix rng(17);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const int m = 1 + static_cast<int>(rng.next_below(6));
    const int a = static_cast<int>(rng.next_below(1 << m));
    const int b = static_cast<int>(rng.next_below(1 << m));
    const double u = rng.next_uniform();
    worst = std::max(worst, shift_identity_residual(u, m, a, b));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("mirroring preserves the uniform measure") {
  const int n = 100000;
  const double bound = 1.63 / std::sqrt(static_cast<double>(n));
  for (int m : {1, 2, 3}) {
    for (int sym = 0; sym < (1 << m); ++sym) {
      SplitMix rng(1000 + 16 * m + sym);
      std::vector<double> mirrored(n);
      for (int i = 0; i < n; ++i) mirrored[i] = mirror(rng.next_uniform(), m, sym);
      CHECK(ks_statistic_uniform(mirrored) < bound);
    }
  }
}
