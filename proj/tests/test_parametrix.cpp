#include <doctest.h>

#include <cmath>

#include "rl/errors.hpp"
#include "rl/parametrix3d.hpp"

using namespace rl;

namespace {
MetricSpec hyp(const char* W = "zero") { return make_metric_spec(2, 0.0, "zero", W); }
Vec unit3(double a, double b, double c) { return (Vec(3) << a, b, c).finished().normalized(); }
}  // namespace

TEST_CASE("exact hyperbolic kernel") {
  // 1/(4 pi sinh 1) = 0.06771391...
  CHECK(exact_h3_kernel(0.0, 1.0).real() == doctest::Approx(0.0677139).epsilon(1e-6));
  CHECK(std::abs(exact_h3_kernel(2.5, 1.3)) == doctest::Approx(std::abs(exact_h3_kernel(0.7, 1.3))).epsilon(1e-14));
  CHECK_THROWS_AS(exact_h3_kernel(1.0, 0.0), Error);
  // (Delta - sigma^2 - 1) R0 = 0 away from the diagonal.
  const cplx sigma(1.5, -0.2);
  PolarFunction f = [&](double r, const Vec&) { return exact_h3_kernel(sigma, r); };
  const BallPoint zp({0.1, 0.2, -0.3});
  const Vec th = unit3(0.4, -0.2, 0.7);
  const cplx L = laplace_apply(hyp(), zp, f, th, 1.2, 1e-3);
  CHECK(std::abs(L - (sigma * sigma + 1.0) * f(1.2, th)) < 1e-6);
}

TEST_CASE("U0 closed forms and normalization") {
  const BallPoint o({0, 0, 0});
  const Vec th = unit3(1, 2, 3);
  CHECK(u0(hyp(), o, th, 1.0) == doctest::Approx(0.0677139).epsilon(1e-6));
  CHECK(u0(hyp(), o, th, 2.0) == doctest::Approx(0.0219411).epsilon(1e-6));
  const MetricSpec s = make_metric_spec(2, 0.2, "bump:0.5", "zero");
  const double r = 1e-3;
  CHECK(4 * kPi * r * u0(s, BallPoint({0.85, 0.0, 0.1}), th, r) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("U1 vanishes in the exact case and matches quadrature for constant W") {
  const BallPoint zp({0.2, -0.1, 0.3});
  const Vec th = unit3(0.3, 0.5, -0.8);
  for (double r : {0.3, 1.0, 3.0}) CHECK(std::abs(u1(hyp(), 1.5, zp, th, r)) < 1e-8);
  // From the origin x(s) = e^{-s}, so U1 = i/(8 pi sigma) c (1 - e^{-2r}) / (2 sinh r).
  const double c = 2.0;
  const cplx sigma(1.5, 0.1);
  for (double r : {0.5, 2.0}) {
    const cplx ref = cplx(0, 1) / (8 * kPi * sigma) * c * (1 - std::exp(-2 * r)) / (2 * std::sinh(r));
    CHECK(std::abs(u1(hyp("const:2"), sigma, BallPoint({0, 0, 0}), th, r) / ref - 1.0) < 1e-8);
  }
  // The transported quantity J^{1/2} U1 starts at 0; U1 itself tends to i c / (8 pi sigma).
  const RayAmplitudes small = ray_amplitudes(hyp("const:2"), BallPoint({0, 0, 0}), th, 1e-4);
  CHECK(std::abs(small.A) < 1e-3);
  CHECK(small.U1hat == doctest::Approx(c).epsilon(1e-3));
  CHECK_THROWS_AS(u1(hyp(), 0.0, zp, th, 1.0), Error);
}

TEST_CASE("laplace_apply: constants, closed form, second order") {
  const BallPoint zp({0.2, -0.1, 0.3});
  const Vec th = unit3(0.3, 0.5, -0.8);
  PolarFunction one = [](double, const Vec&) { return cplx(1.0); };
  CHECK(std::abs(laplace_apply(hyp(), zp, one, th, 1.0, 1e-3)) < 1e-12);
  PolarFunction f = [](double r, const Vec&) { return cplx(1.0 / (4 * kPi * std::sinh(r))); };
  double res[3];
  const double steps[3] = {4e-3, 2e-3, 1e-3};
  for (int k = 0; k < 3; ++k) res[k] = std::abs(laplace_apply(hyp(), zp, f, th, 1.0, steps[k]) - f(1.0, th));
  CHECK(res[2] < 1e-6);
  const double slope = std::log(res[0] / res[2]) / std::log(steps[0] / steps[2]);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK_THROWS_AS(laplace_apply(hyp(), zp, f, th, 1e-3, 1e-3), Error);
}

TEST_CASE("parametrix collapses to the exact kernel") {
  SpectralPoint sp;
  sp.h = 0.05;
  sp.sigma = cplx(1.5, 0.0);
  const BallPoint z({0.5, 0.3, -0.2}), zp({-0.3, 0.1, 0.4});
  const double r = dist0_closed(z, zp);
  const cplx ex = exact_h3_kernel(sp.sigma / sp.h, r) / (sp.h * sp.h);
  CHECK(std::abs(parametrix_kernel(hyp(), sp, z, zp) / ex - 1.0) < 1e-6);
  CHECK(std::abs(error_kernel(hyp(), sp, z, zp)) < 1e-8);
}

TEST_CASE("error kernel is linear in h") {
  const MetricSpec s = make_metric_spec(2, 0.1, "bump:0.5", "radial:1");
  const BallPoint z({0.5, 0.3, -0.2}), zp({-0.3, 0.1, 0.4});
  const PairAmplitudes a = pair_amplitudes(s, z, zp);
  SpectralPoint sp;
  sp.sigma = 1.5;
  double e[3];
  const double hs[3] = {0.1, 0.05, 0.025};
  for (int k = 0; k < 3; ++k) {
    sp.h = hs[k];
    e[k] = std::abs(error_from(a, sp));
  }
  CHECK(std::log(e[0] / e[2]) / std::log(hs[0] / hs[2]) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(e[0] > 0.0);
}

TEST_CASE("transport equations") {
  const MetricSpec s = make_metric_spec(2, 0.1, "bump:0.5", "radial:1");
  const BallPoint b({0.8, 0.1, 0.0});
  const Vec th = unit3(0.2, 0.9, 0.1);
  for (double r : {0.7, 1.5}) {
    const RayAmplitudes ra = ray_amplitudes(s, b, th, r);
    // Zeroth: J^{1/2} U0 is the constant 1/(4 pi).
    CHECK(std::abs(std::sqrt(ra.J) * ra.U0 - 1.0 / (4 * kPi)) < 1e-8);
    // First: 2 i sigma J^{-1/2} d_r(J^{1/2} U1) = -(Delta + x^2 W - 1) U0, with the
    // right side computed independently by finite differences.
    PolarFunction f = [&](double rr, const Vec& t) { return cplx(u0(s, b, t, rr)); };
    const double zn = ra.z.norm();
    const double x = (1 - zn) / (1 + zn);
    const cplx rhs = laplace_apply(s, b, f, th, r, 1e-3) + (x * x * s.potential(ra.z) - 1.0) * f(r, th);
    const double lhs = ra.I / std::sqrt(ra.J) / (4 * kPi);
    CHECK(std::abs(lhs - rhs) < 1e-6);
  }
}

TEST_CASE("boundary behaviour of G and E toward the left face") {
  // |G| ~ rho_L^{n/2 - Im sigma/h} and |E| ~ rho_L^{n/2 + 2 - Im sigma/h}.
  const MetricSpec s = make_metric_spec(2, 0.1, "bump:0.5", "radial:1");
  SpectralPoint sp;
  sp.h = 0.1;
  sp.sigma = cplx(1.5, 0.02);
  const BallPoint zp({0.2, 0.1, 0.0});
  const Vec dir = unit3(0.3, -0.4, 0.5);
  double G[2], E[2], rl[2];
  const double gaps[2] = {1e-3, 1e-4};
  for (int k = 0; k < 2; ++k) {
    const BallPoint z(Vec((1 - gaps[k]) * dir));
    const PairAmplitudes a = pair_amplitudes(s, z, zp);
    G[k] = std::abs(parametrix_from(a, sp));
    E[k] = std::abs(error_from(a, sp));
    rl[k] = boundary_triple(z, zp).rho_l;
  }
  const double expected_g = 1.0 - sp.sigma.imag() / sp.h;
  const double eg = std::log(G[0] / G[1]) / std::log(rl[0] / rl[1]);
  const double ee = std::log(E[0] / E[1]) / std::log(rl[0] / rl[1]);
  CHECK(std::abs(eg / expected_g - 1.0) < 0.05);
  CHECK(std::abs(ee / (expected_g + 2.0) - 1.0) < 0.10);
}

TEST_CASE("spectral point validation and kernel dump") {
  SpectralPoint sp;
  sp.h = 1.5;
  CHECK_THROWS_AS(sp.validate(), Error);
  sp.h = 0.1;
  sp.sigma = 0.0;
  CHECK_THROWS_AS(sp.validate(), Error);
  sp.sigma = 1.5;
  const auto rows = kernel_dump(hyp(), sp, {{BallPoint({0.1, 0, 0}), BallPoint({0, 0.2, 0})}});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].r == doctest::Approx(dist0_closed(BallPoint({0.1, 0, 0}), BallPoint({0, 0.2, 0}))));
  CHECK(std::abs(rows[0].E) < 1e-8);
}
