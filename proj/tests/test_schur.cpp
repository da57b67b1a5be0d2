#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "rl/errors.hpp"
#include "rl/hypgeo.hpp"
#include "rl/schur.hpp"

using namespace rl;

namespace {

KernelGrid plain_grid(const BallGrid& g) {
  KernelGrid K;
  K.wl = K.wr = g.w;
  K.xl = K.xr = g.x;
  K.K = CMatrix::Zero(g.size(), g.size());
  return K;
}

// Small grid shared by the kernel tests: 2 panels x 2 nodes x 12 directions.
const BallGrid& small_grid() {
  static const BallGrid g = make_ball_grid(2, 2, 0);
  return g;
}

const AmplitudeTable& table_for(const char* H, double delta, const char* W) {
  static std::map<std::string, AmplitudeTable> cache;
  const std::string key = std::string(H) + "|" + std::to_string(delta) + "|" + W;
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, compute_amplitudes(make_metric_spec(2, delta, H, W), small_grid())).first;
  return it->second;
}

}  // namespace

TEST_CASE("icosphere vertex counts") {
  CHECK(icosphere(0).size() == 12);
  CHECK(icosphere(1).size() == 42);
  CHECK(icosphere(2).size() == 162);
  for (const Vec& v : icosphere(1)) CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(icosphere(-1), Error);
}

TEST_CASE("ball grid integrates smooth functions") {
  const BallGrid g = make_ball_grid(6, 4, 0);
  CHECK(g.size() == 6 * 4 * 12);
  for (double w : g.w) CHECK(w > 0.0);
  // f = (1 + z_1^2) / cosh^4 t. The icosahedron integrates quadratics
  // exactly, so the angular part is 4 pi (1 + tanh^2(t/2) / 3).
  double sum = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double t = -std::log(g.x[i]);
    sum += g.w[i] * (1.0 + g.z[i](0) * g.z[i](0)) / std::pow(std::cosh(t), 4);
  }
  const double T = 6 * std::log(2.0);
  double exact = 0.0;
  const int M = 20000;
  for (int k = 0; k < M; ++k) {  // midpoint rule on a fine mesh
    const double t = (k + 0.5) * T / M, th = std::tanh(0.5 * t);
    exact += T / M * 4.0 * kPi * std::pow(std::sinh(t), 2) / std::pow(std::cosh(t), 4) * (1.0 + th * th / 3.0);
  }
  CHECK(std::abs(sum - exact) / exact < 1e-2);
  CHECK_THROWS_AS(make_ball_grid(0, 2, 0), Error);
}

TEST_CASE("grid_norm of rank one and diagonal kernels") {
  const BallGrid& g = small_grid();
  KernelGrid K = plain_grid(g);
  Eigen::VectorXcd u(g.size()), v(g.size());
  double nu = 0.0, nv = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    u(i) = cplx(1.0 + g.z[i](0), 0.3 * g.z[i](1));
    v(i) = cplx(std::exp(-g.z[i].squaredNorm()), g.z[i](2));
    nu += g.w[i] * std::norm(u(i));
    nv += g.w[i] * std::norm(v(i));
  }
  K.K = u * v.adjoint();
  CHECK(grid_norm(K) == doctest::Approx(std::sqrt(nu * nv)).epsilon(1e-12));

  // Diagonal kernel: the l2 matrix is diag(w_i d_i).
  KernelGrid D = plain_grid(g);
  double best = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double d = 1.0 / (1.0 + i);
    D.K(i, i) = d;
    best = std::max(best, g.w[i] * d);
  }
  CHECK(grid_norm(D) == doctest::Approx(best).epsilon(1e-12));
  CHECK(power_norm2(D.l2_matrix()) == doctest::Approx(best).epsilon(1e-8));
  CHECK(power_norm2(K.l2_matrix()) == doctest::Approx(grid_norm(K)).epsilon(1e-10));
}

TEST_CASE("grid validation") {
  KernelGrid K = plain_grid(small_grid());
  K.wl[3] = -1.0;
  CHECK_THROWS_AS(K.validate(), Error);
  KernelGrid L = plain_grid(small_grid());
  L.xr.pop_back();
  CHECK_THROWS_AS(grid_norm(L), Error);
}

TEST_CASE("grid_norm is monotone under domination") {
  const BallGrid& g = small_grid();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    KernelGrid A = plain_grid(g), B = plain_grid(g);
    for (int i = 0; i < g.size(); ++i)
      for (int j = 0; j < g.size(); ++j) {
        const double b = std::exp(-(g.z[i] - g.z[j]).squaredNorm()) * U(rng);
        B.K(i, j) = b;
        A.K(i, j) = b * U(rng);
      }
    CHECK(grid_norm(A) <= grid_norm(B) * (1.0 + 1e-12));
  }
}

TEST_CASE("grid_norm is stable under refinement") {
  // A smooth kernel supported well inside the ball.
  auto norm_at = [](int npp, int level) {
    const BallGrid g = make_ball_grid(4, npp, level);
    KernelGrid K = plain_grid(g);
    for (int i = 0; i < g.size(); ++i)
      for (int j = 0; j < g.size(); ++j)
        K.K(i, j) = std::exp(-4.0 * (g.z[i].squaredNorm() + g.z[j].squaredNorm())) * (1.0 + g.z[i].dot(g.z[j]));
    return grid_norm(K);
  };
  const double a = norm_at(4, 0), b = norm_at(6, 1);
  CHECK(std::abs(a - b) / b < 0.02);
}

TEST_CASE("schur_bound cases") {
  CHECK(schur_bound(2.0, 2.0, 1.0, 2, std::nullopt).has_value());
  CHECK_FALSE(schur_bound(1.0, 2.0, 1.0, 2, std::nullopt).has_value());
  CHECK_FALSE(schur_bound(2.0, 1.0, 1.0, 2, std::nullopt).has_value());
  CHECK_FALSE(schur_bound(1.0, 1.0, 1.0, 2, 0.4).has_value());
  const auto b2 = schur_bound(1.0, 2.0, 1.0, 2, 1.0);
  const auto b3 = schur_bound(2.0, 1.0, 1.0, 2, 1.0);
  const auto b4 = schur_bound(1.0, 1.0, 1.0, 2, 1.0);
  REQUIRE(b2.has_value());
  REQUIRE(b3.has_value());
  REQUIRE(b4.has_value());
  // The kernel and its transpose have the same norm.
  CHECK(*b2 == doctest::Approx(*b3).epsilon(1e-10));
  CHECK(*schur_bound(2.0, 2.0, 3.0, 2, std::nullopt) ==
        doctest::Approx(3.0 * *schur_bound(2.0, 2.0, 1.0, 2, std::nullopt)).epsilon(1e-12));
  CHECK_THROWS_AS(schur_bound(0.9, 2.0, 1.0, 2, std::nullopt), Error);
  CHECK_THROWS_AS(schur_bound(2.0, 2.0, -1.0, 2, std::nullopt), Error);
}

TEST_CASE("row integrals diverge at a borderline exponent without the log weight") {
  const double a = schur_row_sup(1.0, 2.0, 2, 0.0, 0.0, 8.0);
  const double b = schur_row_sup(1.0, 2.0, 2, 0.0, 0.0, 16.0);
  const double c = schur_row_sup(1.0, 2.0, 2, 0.0, 0.0, 24.0);
  // Linear growth: the increments do not shrink.
  CHECK(c - b > 0.8 * (b - a));
  CHECK(b - a > 0.1 * a);
  // The supercritical case saturates.
  const double p = schur_row_sup(2.0, 2.0, 2, 0.0, 0.0, 8.0);
  const double q = schur_row_sup(2.0, 2.0, 2, 0.0, 0.0, 16.0);
  CHECK(std::abs(q - p) < 0.05 * q);
}

TEST_CASE("schur_bound dominates grid norms of admissible kernels") {
  const BallGrid g = make_ball_grid(4, 3, 0);
  std::vector<BoundaryTriple> tri(static_cast<std::size_t>(g.size()) * g.size());
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j) tri[i * g.size() + j] = boundary_triple(BallPoint(g.z[i]), BallPoint(g.z[j]));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  struct Case {
    double alpha, beta;
    std::optional<double> N;
  };
  const Case cases[] = {{2.0, 2.0, std::nullopt}, {1.5, 2.5, std::nullopt}, {1.0, 2.0, 1.0}, {1.0, 1.0, 1.0}};
  for (const Case& cs : cases) {
    const double bound = *schur_bound(cs.alpha, cs.beta, 1.0, 2, cs.N);
    for (int trial = 0; trial < 5; ++trial) {
      const double k1 = U(rng), k2 = U(rng), ph = 3.0 * U(rng);
      KernelGrid K = plain_grid(g);
      if (cs.N && std::abs(cs.alpha - 1.0) < 1e-12) K.weight.logN_left = *cs.N;
      if (cs.N && std::abs(cs.beta - 1.0) < 1e-12) K.weight.logN_right = *cs.N;
      for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j) {
          const BoundaryTriple& t = tri[i * g.size() + j];
          // |u| <= 1 and smooth.
          const cplx u = std::exp(cplx(0.0, ph * g.z[i].dot(g.z[j]))) * (0.5 + 0.5 * std::tanh(k1 + k2 * g.z[i](0)));
          K.K(i, j) = std::pow(t.rho_l, cs.alpha) * std::pow(t.rho_r, cs.beta) * u;
        }
      CHECK(grid_norm(K) <= bound * 1.01);
    }
  }
}

TEST_CASE("weighted error norm window and exact case") {
  const BallGrid& g = small_grid();
  SpectralPoint sp;
  sp.h = 0.1;
  sp.sigma = 1.5;
  const AmplitudeTable& T0 = table_for("zero", 0.0, "zero");
  CHECK(weighted_error_norm(T0, g, sp, 0.5) < 1e-8);
  CHECK_THROWS_AS(weighted_error_norm(T0, g, sp, 2.5), Error);
  CHECK_THROWS_AS(weighted_error_norm(T0, g, sp, 0.0), Error);  // b = Im(sigma)/h needs a log weight
  CHECK(weighted_error_norm(T0, g, sp, 0.0, 1.0) < 1e-8);

  const AmplitudeTable& TW = table_for("zero", 0.0, "gauss:1");
  SpectralPoint damped = sp;
  damped.sigma = cplx(1.5, 0.05);
  CHECK_THROWS_AS(weighted_error_norm(TW, g, damped, 0.3), Error);
  const double edge = weighted_error_norm(TW, g, damped, 0.5, 1.0);
  CHECK(std::isfinite(edge));
  CHECK(edge > 0.0);
  CHECK(weighted_error_norm(TW, g, sp, 0.5) > 1e-4);
}

TEST_CASE("resolvent assembly") {
  const BallGrid& g = small_grid();
  SpectralPoint sp;
  sp.h = 0.05;
  sp.sigma = 1.5;
  const AmplitudeTable& T = table_for("zero", 0.0, "gauss:1");
  const KernelGrid G = parametrix_grid(T, g, sp), E = error_grid(T, g, sp);

  SUBCASE("zero error returns G") {
    KernelGrid Z = E;
    Z.K.setZero();
    const AssembledResolvent R = resolvent_assemble(G, Z, 0.5, 0.5);
    KernelGrid Gw = G;
    Gw.weight = {0.5, 0.5, 0.0, 0.0};
    CHECK(R.norm == doctest::Approx(grid_norm(Gw)).epsilon(1e-12));
    CHECK(R.residual < 1e-14);
  }
  SUBCASE("Neumann bound and residual") {
    const AssembledResolvent R = resolvent_assemble(G, E, 0.5, 0.5);
    CHECK(R.e_norm < 0.5);
    CHECK(R.norm <= R.g_norm / (1.0 - R.e_norm) * (1.0 + 1e-12));
    CHECK(R.norm >= R.g_norm / (1.0 + R.e_norm) * (1.0 - 1e-12));
    CHECK(R.residual < 1e-10);
    CHECK(grid_norm(R.R) == doctest::Approx(R.norm).epsilon(1e-10));
  }
  SUBCASE("large error is rejected") {
    KernelGrid Big = E;
    Big.K *= 1e6;
    CHECK_THROWS_AS(resolvent_assemble(G, Big, 0.5, 0.5), Error);
  }
}
