#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "rl/errors.hpp"
#include "rl/fields.hpp"
#include "rl/metric.hpp"

using namespace rl;

TEST_CASE("field registry") {
  CHECK(make_tensor_field("zero", 3)->is_zero());
  CHECK_FALSE(make_tensor_field("bump:0.1", 3)->is_zero());
  CHECK(make_scalar_field("const:2", 3)->value(Vec::Zero(3)) == 2.0);
  CHECK(make_scalar_field("gauss:1", 3)->value(Vec::Zero(3)) == 1.0);
  CHECK_THROWS_AS(make_tensor_field("nope", 3), Error);
  CHECK_THROWS_AS(make_scalar_field("const:abc", 3), Error);
}

TEST_CASE("built-in tensor jets match finite differences") {
  for (const char* name : {"iso:0.3", "bump:0.2"}) {
    const auto H = make_tensor_field(name, 3);
    const Vec z = (Vec(3) << 0.3, -0.2, 0.5).finished();
    const TensorJet j = H->jet(z);
    const double h = 1e-5;
    for (int k = 0; k < 3; ++k) {
      Vec zp = z, zm = z;
      zp(k) += h;
      zm(k) -= h;
      const TensorJet jp = H->jet(zp), jm = H->jet(zm);
      CHECK((j.d[k] - (jp.value - jm.value) / (2 * h)).norm() < 1e-8);
      for (int l = 0; l < 3; ++l) CHECK((j.dd[k][l] - (jp.d[l] - jm.d[l]) / (2 * h)).norm() < 1e-8);
    }
  }
}

TEST_CASE("tabulated grid reproduces a quadratic and validates symmetry") {
  const int n = 9;
  const char* path = "test_field_tab.txt";
  {
    std::ofstream out(path);
    out << "# quadratic potential\n2 " << n << " 1\n";
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = -1.0 + 2.0 * i / (n - 1), y = -1.0 + 2.0 * j / (n - 1);
        out << x * x + 0.5 * y << "\n";
      }
  }
  const auto W = make_scalar_field(std::string("file:") + path, 2);
  const Vec z = (Vec(2) << 0.13, -0.41).finished();
  CHECK(W->value(z) == doctest::Approx(0.13 * 0.13 - 0.205).epsilon(1e-12));
  CHECK_THROWS_AS(make_scalar_field(std::string("file:") + path, 3), Error);
  {
    std::ofstream out(path);
    out << "2 4 4\n";
    for (int i = 0; i < 16; ++i) out << "1 0.5 0.4 1\n";
  }
  CHECK_THROWS_AS(make_tensor_field(std::string("file:") + path, 2), Error);
  std::remove(path);
}

TEST_CASE("metric_eval examples and jets") {
  const MetricSpec s0 = make_metric_spec(2, 0.0, "bump:0.5", "zero");
  CHECK((metric_eval(s0, Vec::Zero(3)) - 4.0 * Mat::Identity(3, 3)).norm() == 0.0);
  const MetricSpec s1 = make_metric_spec(2, 0.1, "zero", "zero");
  const Vec z = (Vec(3) << 0.95, 0.0, 0.0).finished();
  CHECK((metric_eval(s1, z) - 4.0 / std::pow(1 - 0.95 * 0.95, 2) * Mat::Identity(3, 3)).norm() == 0.0);
  const MetricSpec s2 = make_metric_spec(2, 0.1, "bump:0.5", "zero");
  const Vec zi = (Vec(3) << 0.5, 0.1, 0.0).finished();
  CHECK((metric_eval(s2, zi) - metric_eval(s0, zi)).norm() == 0.0);
  // Inside the cutoff shell: derivatives against finite differences.
  const Vec zc = (Vec(3) << 0.6, 0.7, 0.1).finished();
  const MetricJet J = metric_jet(s2, zc);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Vec zp = zc, zm = zc;
    zp(k) += h;
    zm(k) -= h;
    const MetricJet Jp = metric_jet(s2, zp), Jm = metric_jet(s2, zm);
    CHECK((J.dg[k] - (Jp.g - Jm.g) / (2 * h)).norm() < 1e-6 * J.dg[k].norm() + 1e-6);
    for (int l = 0; l < 3; ++l)
      CHECK((J.ddg[k][l] - (Jp.dg[l] - Jm.dg[l]) / (2 * h)).norm() < 1e-5 * (1 + J.ddg[k][l].norm()));
  }
  CHECK_THROWS_AS(make_metric_spec(2, 1.5, "zero", "zero"), Error);
  const MetricSpec bad = make_metric_spec(2, 0.1, "iso:-1000", "zero");
  CHECK_THROWS_AS(metric_eval(bad, zc), Error);
}

TEST_CASE("cutoff profile") {
  CHECK(chi_profile(0.3) == 1.0);
  CHECK(chi_profile(1.2) == 0.0);
  CHECK(chi_profile(0.75) == doctest::Approx(0.5));
  double d1, d2;
  const double s = 0.7, h = 1e-5;
  chi_profile(s, &d1, &d2);
  CHECK(d1 == doctest::Approx((chi_profile(s + h) - chi_profile(s - h)) / (2 * h)).epsilon(1e-7));
  double p1, m1;
  chi_profile(s + h, &p1);
  chi_profile(s - h, &m1);
  CHECK(d2 == doctest::Approx((p1 - m1) / (2 * h)).epsilon(1e-6));
}
