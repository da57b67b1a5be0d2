#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "rl/errors.hpp"
#include "rl/hamflow.hpp"

using namespace rl;

namespace {
MetricSpec flat_spec() { return make_metric_spec(2, 0.0, "zero", "zero"); }

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

Vec cross(const Vec& a, const Vec& b) {
  const Eigen::Vector3d c = Eigen::Vector3d(a(0), a(1), a(2)).cross(Eigen::Vector3d(b(0), b(1), b(2)));
  return v3(c(0), c(1), c(2));
}
}  // namespace

TEST_CASE("geodesic from the origin stays on the ray") {
  const GeodesicPath p = geodesic_shoot(flat_spec(), BallPoint({0, 0, 0}), v3(0.3, 0.4, 0.0), 5.0, 21);
  REQUIRE_FALSE(p.truncated);
  for (const auto& s : p.samples) {
    const Vec u = s.z.normalized();
    if (s.t > 0) CHECK((u - v3(0.6, 0.8, 0.0)).norm() < 1e-10);
    // Arclength parametrization: distance to the origin equals t.
    CHECK(dist0_closed(BallPoint({0, 0, 0}), BallPoint(s.z)) == doctest::Approx(s.t).epsilon(1e-9));
  }
}

TEST_CASE("generic geodesic lies on a circle orthogonal to the sphere") {
  const GeodesicPath p = geodesic_shoot(flat_spec(), BallPoint({0.2, -0.3, 0.1}), v3(0.5, 0.7, -0.2), 4.0, 41);
  REQUIRE(p.samples.size() == 41);
  // Circle through three samples; orthogonality: |c|^2 = R^2 + 1.
  const Vec A = p.samples[0].z, B = p.samples[20].z, C = p.samples[40].z;
  const Vec ab = B - A, ac = C - A;
  const Vec nrm = cross(ab, ac);
  const Vec center = A + (ac.squaredNorm() * cross(nrm, ab) + ab.squaredNorm() * cross(ac, nrm)) /
                             (2.0 * nrm.squaredNorm());
  const double R = (A - center).norm();
  CHECK(center.squaredNorm() == doctest::Approx(R * R + 1.0).epsilon(1e-8));
  for (const auto& s : p.samples) {
    CHECK(std::abs((s.z - center).norm() - R) < 1e-8);
    CHECK(std::abs(nrm.normalized().dot(s.z - A)) < 1e-8);
  }
}

TEST_CASE("energy conservation over T = 20") {
  for (const char* H : {"zero", "bump:0.3", "iso:0.5"}) {
    const MetricSpec s = make_metric_spec(2, 0.1, H, "zero");
    const GeodesicPath p = geodesic_shoot(s, BallPoint({0.1, 0.2, -0.1}), v3(0.2, 0.9, 0.3), 20.0, 11);
    CHECK(p.max_rel_drift < 1e-9);
    for (const auto& smp : p.samples) CHECK(std::abs(smp.energy - 1.0) < 1e-9);
  }
}

TEST_CASE("guard shell truncation") {
  const GeodesicPath p = geodesic_shoot(flat_spec(), BallPoint({0, 0, 0}), v3(1, 0, 0), 40.0, 5);
  CHECK(p.truncated);
  const double gap = p.samples.back().s / 2.0;
  CHECK(gap > 0.5 * kGuardShell);
  CHECK(gap < 2.0 * kGuardShell);
  CHECK(p.samples.back().t < 40.0);
}

TEST_CASE("distance_flow matches the closed form") {
  const DistanceResult r = distance_flow(flat_spec(), BallPoint({0, 0, 0}), BallPoint({0.5, 0, 0}));
  CHECK(r.distance == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.95, 0.95);
  for (int i = 0; i < 10; ++i) {
    Vec a(3), b(3);
    do {
      for (int k = 0; k < 3; ++k) {
        a(k) = U(rng);
        b(k) = U(rng);
      }
    } while (a.norm() > 0.95 || b.norm() > 0.95);
    const double ref = dist0_closed(BallPoint(a), BallPoint(b));
    CHECK(distance_flow(flat_spec(), BallPoint(a), BallPoint(b)).distance == doctest::Approx(ref).epsilon(1e-8));
  }
  CHECK_THROWS_AS(distance_flow(flat_spec(), BallPoint({0.1, 0, 0}), BallPoint({0.1, 0, 0})), Error);
}

TEST_CASE("perturbed distance: symmetry and convergence as delta shrinks") {
  const BallPoint a({0.85, 0.3, 0.0}), b({-0.2, 0.9, 0.1});
  const double d0 = dist0_closed(a, b);
  double prev = 1e300;
  for (double delta : {0.2, 0.1, 0.05}) {
    const MetricSpec s = make_metric_spec(2, delta, "bump:0.5", "zero");
    const double dab = distance_flow(s, a, b).distance;
    const double dba = distance_flow(s, b, a).distance;
    CHECK(std::abs(dab - dba) < 1e-8);
    const double gap = std::abs(dab - d0);
    CHECK(gap <= prev + 1e-12);
    prev = gap;
  }
}

TEST_CASE("jacobi density in hyperbolic space") {
  const MetricSpec s = flat_spec();
  CHECK(jacobi_density(s, BallPoint({0, 0, 0}), v3(1, 0, 0), 1.0) ==
        doctest::Approx(std::pow(std::sinh(1.0), 2)).epsilon(1e-8));
  CHECK(jacobi_density(s, BallPoint({0.3, -0.5, 0.2}), v3(0.2, 0.3, -0.9), 2.0) ==
        doctest::Approx(std::pow(std::sinh(2.0), 2)).epsilon(1e-8));
  const double r = 1e-3;
  const MetricSpec sp = make_metric_spec(2, 0.2, "bump:0.5", "zero");
  CHECK(jacobi_density(sp, BallPoint({0.85, 0, 0}), v3(0, 1, 0), r) / (r * r) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("half-space model flow") {
  HalfspaceState s;
  s.x = 1.0;
  s.y = Vec::Zero(2);
  s.lambda = 1.0;
  s.mu = Vec::Zero(2);
  auto tr = halfspace_flow0(s, 3.0, 7);
  for (const auto& p : tr) {
    CHECK(p.s.lambda == doctest::Approx(1.0));
    CHECK(p.s.x == doctest::Approx(std::exp(p.t)).epsilon(1e-10));
  }
  s.lambda = 0.0;
  s.mu = (Vec(2) << 0.6, 0.8).finished();
  tr = halfspace_flow0(s, 25.0, 101);
  for (const auto& p : tr) {
    CHECK(p.s.lambda == doctest::Approx(-std::tanh(p.t)).epsilon(1e-9));
    CHECK(std::abs(p.energy2 - 1.0) < 1e-10);
    if (p.s.x < 1e-8) CHECK(std::abs(p.s.lambda) - 1.0 < 1e-6);
  }
  CHECK(tr.back().s.x < 1e-8);
  // Backwards in time lambda tends to +1.
  const auto back = halfspace_flow0(s, -25.0, 3);
  CHECK(back.back().s.lambda == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("validate_delta on a small perturbation") {
  const DeltaReport r = validate_delta(make_metric_spec(2, 0.1, "bump:0.2", "zero"), 4.0, 4);
  CHECK(r.ok);
  CHECK(r.shots == 12);
  CHECK(r.min_density_ratio > 0.0);
}
