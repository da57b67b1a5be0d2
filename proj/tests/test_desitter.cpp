#include <doctest.h>

#include <cmath>
#include <random>

#include "rl/desitter.hpp"
#include "rl/errors.hpp"

using namespace rl;

namespace {

// Independent root finder for r^3 - (3/Lambda) r + 6m/Lambda on a bracket.
double bisect_root(double m, double Lambda, double lo, double hi) {
  auto f = [&](double r) { return r * r * r - 3.0 / Lambda * r + 6.0 * m / Lambda; };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(lo) < 0) == (f(mid) < 0)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double raw_alpha2(double m, double Lambda, double r) { return 1.0 - 2.0 * m / r - Lambda * r * r / 3.0; }

}  // namespace

TEST_CASE("horizons match a bisection oracle for m = 1, Lambda = 0.1") {
  const Horizons h = horizons(1.0, 0.1);
  CHECK_FALSE(h.degenerate);
  CHECK(h.r_H == doctest::Approx(bisect_root(1.0, 0.1, 2.0, 3.0)).epsilon(1e-13));
  CHECK(h.r_I == doctest::Approx(bisect_root(1.0, 0.1, 3.0, 5.0)).epsilon(1e-13));
  CHECK(h.r_neg == doctest::Approx(-(h.r_H + h.r_I)).epsilon(1e-13));
  CHECK(h.r_H == doctest::Approx(2.5577999422).epsilon(1e-9));
  CHECK(h.r_I == doctest::Approx(3.7304158097).epsilon(1e-9));
}

TEST_CASE("surface gravities and peak of the reference model") {
  const DSSModel M = make_dss_model(1.0, 0.1);
  CHECK(M.beta_H == doctest::Approx(0.067590).epsilon(1e-4));
  CHECK(M.beta_I == doctest::Approx(-0.052487).epsilon(1e-4));
  CHECK(M.r_peak == doctest::Approx(std::cbrt(30.0)).epsilon(1e-13));
  CHECK(beta_at(M, M.r_peak) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(M.alpha_peak == doctest::Approx(std::sqrt(raw_alpha2(1.0, 0.1, M.r_peak))).epsilon(1e-12));
}

TEST_CASE("degenerate and invalid parameters") {
  const Horizons h = horizons(1.0, 1.0 / 9.0);
  CHECK(h.degenerate);
  CHECK(h.r_H == doctest::Approx(3.0));
  CHECK(h.r_I == doctest::Approx(3.0));
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Accuracy;
  };
  CHECK(kind_of([] { make_dss_model(1.0, 1.0 / 9.0); }) == ErrorKind::Validation);
  CHECK(kind_of([] { horizons(1.0, 0.2); }) == ErrorKind::Validation);
  CHECK(kind_of([] { horizons(-1.0, 0.1); }) == ErrorKind::Validation);
  CHECK(kind_of([] { make_dss_model(1.0, 0.1, 1); }) == ErrorKind::Validation);
}

TEST_CASE("property: random subextremal parameters give two simple horizons") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> um(0.1, 5.0), uq(0.05, 0.98);
  for (int k = 0; k < 1000; ++k) {
    const double m = um(rng), Lambda = uq(rng) / (9.0 * m * m);
    const DSSModel M = make_dss_model(m, Lambda);
    CHECK(std::abs(raw_alpha2(m, Lambda, M.r_H)) < 1e-12);
    CHECK(std::abs(raw_alpha2(m, Lambda, M.r_I)) < 1e-12);
    CHECK(M.beta_H > 0.0);
    CHECK(M.beta_I < 0.0);
    CHECK(M.r_H < M.r_peak);
    CHECK(M.r_peak < M.r_I);
  }
}

TEST_CASE("boundary defining function x") {
  const DSSModel M = make_dss_model(1.0, 0.1);
  const double D = M.r_I - M.r_H;
  CHECK(x_of_r(M, M.r_H) == 0.0);
  CHECK(x_of_r(M, M.r_I) == 0.0);
  for (double f : {1e-6, 1e-3, 0.1}) {
    const double rH = M.r_H + f * D, rI = M.r_I - f * D;
    CHECK(2 * M.r_H * M.beta_H * x_of_r(M, rH) == doctest::Approx(std::sqrt(M.alpha2(rH))).epsilon(1e-12));
    CHECK(2 * M.r_I * std::abs(M.beta_I) * x_of_r(M, rI) ==
          doctest::Approx(std::sqrt(M.alpha2(rI))).epsilon(1e-12));
  }
  for (int i = 1; i < 200; ++i) CHECK(x_of_r(M, M.r_H + i * D / 200) > 0.0);
  // The blend is C^1: one-sided difference quotients agree across each window edge.
  const double e = 1e-7;
  for (double f : {0.2, 0.4, 0.6, 0.8}) {
    const double r = M.r_H + f * D;
    const double left = (x_of_r(M, r) - x_of_r(M, r - e)) / e;
    const double right = (x_of_r(M, r + e) - x_of_r(M, r)) / e;
    CHECK(std::abs(left - right) < 1e-6);
  }
}

TEST_CASE("weight tilde-alpha decays like exp(-|r_*|) at both ends") {
  const DSSModel M = make_dss_model(1.0, 0.1);
  CHECK(tilde_alpha(M, M.r_peak) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(log_tilde_alpha(M, r_of_tortoise(M, -3000.0)) / 3000.0 == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(log_tilde_alpha(M, r_of_tortoise(M, 3000.0)) / 3000.0 == doctest::Approx(-1.0).epsilon(0.01));
  const double r = M.r_H + 1e-4;
  CHECK(log_tilde_alpha(M, r) / std::log(std::sqrt(M.alpha2(r)) / M.alpha_peak) ==
        doctest::Approx(1.0 / M.beta_H).epsilon(1e-10));
  CHECK(tilde_alpha(M, r, 0.5) == doctest::Approx(std::sqrt(tilde_alpha(M, r))).epsilon(1e-12));
}

TEST_CASE("tortoise coordinate") {
  const DSSModel M = make_dss_model(1.0, 0.1);
  CHECK(tortoise_of_r(M, M.r_peak) == doctest::Approx(0.0).epsilon(1e-12));
  for (double rs : {-400.0, -20.0, 0.0, 3.0, 250.0}) {
    const TortoisePoint p = r_of_tortoise(M, rs);
    if (std::abs(rs) < 50) CHECK(tortoise_of_r(M, p.r) == doctest::Approx(rs).epsilon(1e-10));
    CHECK(p.dH + p.dI == doctest::Approx(M.r_I - M.r_H).epsilon(1e-13));
  }
  // r - r_H ~ exp(2 beta_H r_*) and r_I - r ~ exp(-2 |beta_I| r_*)
  const double rateH = std::log(r_of_tortoise(M, -200.0).dH / r_of_tortoise(M, -300.0).dH) / 100.0;
  const double rateI = std::log(r_of_tortoise(M, 200.0).dI / r_of_tortoise(M, 300.0).dI) / 100.0;
  CHECK(rateH == doctest::Approx(2 * M.beta_H).epsilon(0.01));
  CHECK(rateI == doctest::Approx(2 * std::abs(M.beta_I)).epsilon(0.01));
}

TEST_CASE("mode coefficients") {
  const DSSModel M = make_dss_model(1.0, 0.1);
  CHECK(mode_coefficients(M, 0).angular_eigenvalue == 0.0);
  CHECK(mode_coefficients(M, 1).angular_eigenvalue == 2.0);
  CHECK(mode_coefficients(M, 2).angular_eigenvalue == 6.0);
  CHECK(mode_coefficients(make_dss_model(1.0, 0.1, 3), 2).angular_eigenvalue == 8.0);
  const ModeCoefficients c = mode_coefficients(M, 1, 51);
  REQUIRE(c.r.size() == 51);
  for (std::size_t i = 0; i < c.r.size(); ++i) {
    CHECK(c.alpha2[i] >= 0.0);
    CHECK(c.beta[i] == doctest::Approx(beta_at(M, c.r[i])).epsilon(1e-14));
  }
}

TEST_CASE("near each end the operator matches the hyperbolic model to second order") {
  const DSSModel M = make_dss_model(1.0, 0.1);
  for (End end : {End::H, End::I}) {
    const EndCheckReport rep = model_end_check(M, end);
    CHECK(rep.ok);
    CHECK(rep.exponent >= 1.9);
    CHECK(std::isfinite(rep.limit_ratio));
    CHECK(rep.curvature_exponent == doctest::Approx(2.0).epsilon(0.1));
  }
}
