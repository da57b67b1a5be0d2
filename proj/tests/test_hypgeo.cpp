#include <doctest.h>

#include <cmath>
#include <random>

#include "rl/errors.hpp"
#include "rl/hypgeo.hpp"

using namespace rl;

namespace {
Vec random_interior(std::mt19937_64& rng, int d, double rmax = 0.999) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vec z(d);
  do {
    for (int i = 0; i < d; ++i) z(i) = U(rng);
  } while (z.norm() >= rmax);
  return z;
}
}  // namespace

TEST_CASE("dist0_closed oracle values") {
  CHECK(dist0_closed({0, 0, 0}, {0, 0, 0}) == 0.0);
  CHECK(dist0_closed({0, 0, 0}, {0.5, 0, 0}) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(dist0_closed({0.3, 0, 0}, {-0.3, 0, 0}) == doctest::Approx(2.0 * std::log(13.0 / 7.0)).epsilon(1e-14));
  // 2 log(13/7) = 1.2380784...
  CHECK(dist0_closed({0.3, 0, 0}, {-0.3, 0, 0}) == doctest::Approx(1.2380784).epsilon(1e-7));
}

TEST_CASE("BallPoint rejects boundary and bad dimensions") {
  CHECK_THROWS_AS(BallPoint({1.0, 0.0}), Error);
  CHECK_THROWS_AS(BallPoint({0.5}), Error);
  try {
    BallPoint({0.8, 0.8, 0.0});
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
  }
}

TEST_CASE("boundary_triple oracle values") {
  const double r = std::sqrt(1.0 - 1e-3);
  const BoundaryTriple t = boundary_triple({r, 0, 0}, {r, 0, 0});
  CHECK(t.rho_l == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(t.rho_r == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(t.front == doctest::Approx(std::sqrt(2.0) * 1e-3).epsilon(1e-9));
  const BoundaryTriple c = boundary_triple({0, 0, 0}, {0, 0, 0});
  CHECK(c.front == doctest::Approx(std::sqrt(2.0)));
  CHECK(c.rho_l == doctest::Approx(1.0 / std::sqrt(2.0)));
  const BoundaryTriple e = boundary_triple({0, 0, 0}, {1.0 - 1e-9, 0, 0});
  CHECK(e.rho_r < 1e-8);
  CHECK(e.rho_l > 0.5);
}

TEST_CASE("log_structure_F is bounded and positive along boundary rays") {
  double lo = 1e300, hi = -1e300;
  for (int k = 1; k <= 8; ++k) {
    const double t = 1.0 - std::pow(10.0, -k);
    const double F = log_structure_F({t, 0, 0}, {0, 0, 0});
    lo = std::min(lo, F);
    hi = std::max(hi, F);
    // Along z' = 0: F = log(2(1+t)^2 / ((1-t^2)^2 + 1 + t^2)).
    const double ref = std::log(2.0 * (1 + t) * (1 + t) / ((1 - t * t) * (1 - t * t) + 1 + t * t));
    CHECK(F == doctest::Approx(ref).epsilon(1e-12));
    const double Fa = log_structure_F({t, 0, 0}, {-t, 0, 0});
    CHECK(Fa > 0.0);
    CHECK(Fa < 5.0);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 2.0 * std::log(2.0) + 1e-12);
  CHECK_THROWS_AS(log_structure_F({0.1, 0, 0}, {0.1, 0, 0}), Error);
}

TEST_CASE("F squared vanishes quadratically at the diagonal") {
  const Vec base = (Vec(3) << 0.5, 0.0, 0.0).finished();
  const Vec dir = (Vec(3) << 0.6, 0.8, 0.0).finished();
  const double e1 = 1e-3, e2 = 1e-4;
  const double F1 = log_structure_F(BallPoint(base), BallPoint(Vec(base + e1 * dir)));
  const double F2 = log_structure_F(BallPoint(base), BallPoint(Vec(base + e2 * dir)));
  const double slope = std::log(F1 * F1 / (F2 * F2)) / std::log(e1 / e2);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("property: symmetry, triangle inequality, exponential identity") {
  std::mt19937_64 rng(7);
  int bad_tri = 0;
  for (int i = 0; i < 10000; ++i) {
    const int d = 2 + i % 3;
    const BallPoint a(random_interior(rng, d)), b(random_interior(rng, d)), c(random_interior(rng, d));
    const double ab = dist0_closed(a, b), ba = dist0_closed(b, a);
    CHECK(std::abs(ab - ba) <= 1e-15 * std::max(1.0, ab));
    if (ab > dist0_closed(a, c) + dist0_closed(c, b) + 1e-12) ++bad_tri;
    if (i % 10 == 0 && ab > 1e-6) {
      const double lhs = std::exp(ab);
      CHECK(std::abs(exp_dist_from_triple(a, b) / lhs - 1.0) < 1e-10);
      CHECK(log_structure_F(a, b) > 0.0);
    }
  }
  CHECK(bad_tri == 0);
}

TEST_CASE("acosh1p series branch matches the log branch") {
  for (double u : {1e-9, 5e-9, 2e-8}) {
    const double ref = std::log1p(u + std::sqrt(u * (u + 2.0)));
    CHECK(acosh1p(u) == doctest::Approx(ref).epsilon(1e-7));
  }
  CHECK(acosh1p(0.0) == 0.0);
}
