#include "rl/parametrix3d.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "rl/errors.hpp"

namespace rl {

namespace {

constexpr int kD = 3;
constexpr int kRay = 2 * kD + 1 + 4 * kD;  // z, v, s, (Y, Y') x 2

using M2 = Eigen::Matrix2d;
using M32 = Eigen::Matrix<double, 3, 2>;

struct RayGeom {
  Vec z;
  double J = 0, l1 = 0, l2 = 0;  // J, J'/J, J''/J
  double sqrtD = 0;
  M2 S;                          // adj(H) / sqrt(det H)
  double x2W = 0;
};

struct Stencil {
  int m = 2;
  int side = 5;
  double eps = 0.05;
  Vec theta0;
  M32 E;
  std::vector<Vec> theta;
  std::vector<double> detsig;
  State init;
  int nrays() const { return side * side; }
  int idx(int i, int j) const { return (i + m) * side + (j + m); }
};

Stencil make_stencil(const MetricSpec& spec, const BallPoint& zp, const Vec& theta0, int m, double eps) {
  Stencil st;
  st.m = m;
  st.side = 2 * m + 1;
  st.eps = eps;
  st.theta0 = theta0.normalized();
  const Mat Eb = transverse_basis(st.theta0);
  st.E = Eb;
  const Mat F = metric_frame(metric_eval(spec, zp.coords()));
  const Vec& z = zp.coords();
  st.init.assign(static_cast<std::size_t>(st.nrays()) * kRay, 0.0);
  st.theta.resize(st.nrays());
  st.detsig.resize(st.nrays());
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) {
      const int q = st.idx(i, j);
      const Vec p = st.theta0 + eps * (i * Eb.col(0) + j * Eb.col(1));
      const double np = p.norm();
      const Vec th = p / np;
      Vec dth[2];
      for (int a = 0; a < 2; ++a) dth[a] = (Vec(Eb.col(a)) - th * th.dot(Eb.col(a))) / np;
      M2 sig;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) sig(a, b) = dth[a].dot(dth[b]);
      st.theta[q] = th;
      st.detsig[q] = sig.determinant();
      double* x = &st.init[static_cast<std::size_t>(q) * kRay];
      const Vec v = F * th;
      for (int k = 0; k < kD; ++k) {
        x[k] = z(k);
        x[kD + k] = v(k);
      }
      x[2 * kD] = 1.0 - z.squaredNorm();
      for (int a = 0; a < 2; ++a) {
        const Vec U = F * dth[a];
        for (int k = 0; k < kD; ++k) x[2 * kD + 1 + 2 * kD * a + kD + k] = U(k);
      }
    }
  return st;
}

Vec seg3(const double* x, int off) { return (Vec(3) << x[off], x[off + 1], x[off + 2]).finished(); }

// Derivative of one ray state and, optionally, its polar-coordinate geometry.
void ray_eval(const MetricSpec& spec, const double* x, double detsig, double* dx, RayGeom* geo) {
  const Vec z = seg3(x, 0), v = seg3(x, kD);
  const double s = x[2 * kD];
  const MetricJet Jt = metric_jet(spec, z, s, true);
  const Mat ginv = Jt.g.inverse();
  const Vec a = geodesic_accel(Jt, ginv, v);
  M32 Y, U, P;
  for (int f = 0; f < 2; ++f) {
    const int off = 2 * kD + 1 + 2 * kD * f;
    const Vec Yf = seg3(x, off), Uf = seg3(x, off + kD);
    const Vec Pf = jacobi_accel(Jt, ginv, v, a, Yf, Uf);
    for (int k = 0; k < kD; ++k) {
      Y(k, f) = Yf(k);
      U(k, f) = Uf(k);
      P(k, f) = Pf(k);
    }
  }
  if (dx) {
    for (int k = 0; k < kD; ++k) {
      dx[k] = v(k);
      dx[kD + k] = a(k);
    }
    dx[2 * kD] = -2.0 * z.dot(v);
    for (int f = 0; f < 2; ++f) {
      const int off = 2 * kD + 1 + 2 * kD * f;
      for (int k = 0; k < kD; ++k) {
        dx[off + k] = U(k, f);
        dx[off + kD + k] = P(k, f);
      }
    }
  }
  if (!geo) return;
  Eigen::Matrix3d g = Jt.g, gd = Eigen::Matrix3d::Zero(), gdd = Eigen::Matrix3d::Zero();
  for (int k = 0; k < kD; ++k) {
    gd += v(k) * Jt.dg[k];
    gdd += a(k) * Jt.dg[k];
    for (int l = 0; l < kD; ++l) gdd += v(k) * v(l) * Jt.ddg[k][l];
  }
  const M2 H = Y.transpose() * g * Y;
  const M2 H1 = U.transpose() * g * Y + Y.transpose() * g * U + Y.transpose() * gd * Y;
  const M2 H2 = P.transpose() * g * Y + Y.transpose() * g * P + 2.0 * U.transpose() * g * U +
                2.0 * (U.transpose() * gd * Y + Y.transpose() * gd * U) + Y.transpose() * gdd * Y;
  const double D = H.determinant();
  if (!(D > 0.0)) fail(ErrorKind::ConjugatePoint, "degenerate Jacobi matrix on the ray stencil");
  const M2 Hi = H.inverse();
  const M2 B = Hi * H1;
  const double t1 = B.trace();
  const double DppD = t1 * t1 - (B * B).trace() + (Hi * H2).trace();
  geo->z = z;
  geo->J = std::sqrt(D / detsig);
  geo->l1 = 0.5 * t1;
  geo->l2 = 0.5 * DppD - 0.25 * t1 * t1;
  geo->sqrtD = std::sqrt(D);
  M2 adj;
  adj << H(1, 1), -H(0, 1), -H(1, 0), H(0, 0);
  geo->S = adj / geo->sqrtD;
  const double xb = s / ((1.0 + z.norm()) * (1.0 + z.norm()));
  geo->x2W = xb * xb * spec.potential(z);
}

void stencil_geometry(const MetricSpec& spec, const Stencil& st, const State& X, std::vector<RayGeom>& geo,
                      State* dX) {
  geo.resize(st.nrays());
  for (int q = 0; q < st.nrays(); ++q) {
    const std::size_t off = static_cast<std::size_t>(q) * kRay;
    ray_eval(spec, &X[off], st.detsig[q], dX ? &(*dX)[off] : nullptr, &geo[q]);
  }
}

// Angular Laplacian at stencil node (i, j) of values f(ii, jj):
//   -(1/sqrt D) [ S^{ab} d_a d_b f + (d_a S^{ab}) d_b f ].
template <class T, class Fn>
T ang_lap(const Stencil& st, const std::vector<RayGeom>& geo, int i, int j, const Fn& f) {
  const double e = st.eps;
  auto S = [&](int ii, int jj) -> const M2& { return geo[st.idx(ii, jj)].S; };
  const T f1 = (f(i + 1, j) - f(i - 1, j)) / (2 * e);
  const T f2 = (f(i, j + 1) - f(i, j - 1)) / (2 * e);
  const T f11 = (f(i + 1, j) - 2.0 * f(i, j) + f(i - 1, j)) / (e * e);
  const T f22 = (f(i, j + 1) - 2.0 * f(i, j) + f(i, j - 1)) / (e * e);
  const T f12 = (f(i + 1, j + 1) - f(i + 1, j - 1) - f(i - 1, j + 1) + f(i - 1, j - 1)) / (4 * e * e);
  const M2& Sc = S(i, j);
  double divS[2];
  for (int b = 0; b < 2; ++b)
    divS[b] = (S(i + 1, j)(0, b) - S(i - 1, j)(0, b)) / (2 * e) + (S(i, j + 1)(1, b) - S(i, j - 1)(1, b)) / (2 * e);
  const T val = Sc(0, 0) * f11 + 2.0 * Sc(0, 1) * f12 + Sc(1, 1) * f22 + divS[0] * f1 + divS[1] * f2;
  return -val / geo[st.idx(i, j)].sqrtD;
}

// J^{1/2} (Delta + x^2 W - 1) J^{-1/2} on each inner ray (|i|, |j| <= m-1).
void inner_integrand(const Stencil& st, const std::vector<RayGeom>& geo, std::vector<double>& I) {
  const int mi = st.m - 1;
  I.assign((2 * mi + 1) * (2 * mi + 1), 0.0);
  auto f = [&](int ii, int jj) { return 1.0 / std::sqrt(geo[st.idx(ii, jj)].J); };
  int k = 0;
  for (int i = -mi; i <= mi; ++i)
    for (int j = -mi; j <= mi; ++j, ++k) {
      const RayGeom& c = geo[st.idx(i, j)];
      const double ang = ang_lap<double>(st, geo, i, j, f);
      I[k] = std::sqrt(c.J) * ang + 0.5 * c.l2 - 0.25 * c.l1 * c.l1 + c.x2W - 1.0;
    }
}

OdeRhs stencil_rhs(const MetricSpec& spec, const Stencil& st) {
  return [&spec, &st](const State& X, State& dX, double) {
    for (int q = 0; q < st.nrays(); ++q) {
      const std::size_t off = static_cast<std::size_t>(q) * kRay;
      ray_eval(spec, &X[off], st.detsig[q], &dX[off], nullptr);
    }
  };
}

void check_3d(const MetricSpec& spec) {
  spec.validate();
  if (spec.n != 2) fail(ErrorKind::Validation, "the parametrix is implemented for n = 2 (the 3-ball) only");
}

}  // namespace

void SpectralPoint::validate() const {
  if (!(h > 0.0 && h < 1.0)) fail(ErrorKind::Validation, "h must lie in (0, 1)");
  if (sigma == cplx(0.0, 0.0)) fail(ErrorKind::Validation, "sigma must be nonzero");
  if (!std::isfinite(sigma.real()) || !std::isfinite(sigma.imag())) fail(ErrorKind::Validation, "sigma must be finite");
}

cplx exact_h3_kernel(cplx sigma, double r) {
  if (!(r > 0.0)) fail(ErrorKind::Singular, "exact kernel is singular on the diagonal");
  return std::exp(cplx(0.0, -1.0) * sigma * r) / (4.0 * kPi * std::sinh(r));
}

RayAmplitudes ray_amplitudes(const MetricSpec& spec, const BallPoint& zp, const Vec& theta0, double r,
                             const StencilOptions& opt) {
  check_3d(spec);
  if (zp.dim() != kD || theta0.size() != kD) fail(ErrorKind::Validation, "the parametrix needs 3-vectors");
  if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::Validation, "r must be positive");
  const Stencil st = make_stencil(spec, zp, theta0, 2, opt.eps);
  const OdeRhs rhs = stencil_rhs(spec, st);
  OdeOptions oo;
  oo.rel_tol = opt.rel_tol;
  oo.abs_tol = opt.abs_tol;
  oo.dt0 = std::min(1e-3, r / 8);
  DenseStepper stepper(rhs, st.init, 0.0, oo);

  // The integrand is smooth at r = 0 but its finite-difference evaluation
  // loses accuracy like 1/r^2 there, so [0, rs] gets its own three-point
  // Gauss rule whose nodes stay well away from 0.
  const double eta = std::min(opt.eta, r / 4);
  const double rs = std::min(opt.r_start, r / 2);
  struct Want {
    double t;
    int tag;  // 0..2 Gauss nodes on [0, rs], 3..5 radii r - eta, r, r + eta
  };
  static const double gx[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  std::vector<Want> want{{gx[0] * rs, 0}, {gx[1] * rs, 1}, {gx[2] * rs, 2},
                         {r - eta, 3},    {r, 4},          {r + eta, 5}};
  std::stable_sort(want.begin(), want.end(), [](const Want& x, const Want& y) { return x.t < y.t; });
  std::array<std::vector<RayGeom>, 3> geo_at;
  std::vector<double> A(9, 0.0), Ik;
  std::vector<RayGeom> geo;
  State X(st.init.size());
  std::size_t next = 0;
  while (next < want.size()) {
    stepper.step();
    const double a = std::max(stepper.t_prev(), rs), b = stepper.t();
    const double hi = std::min(b, r);
    if (hi > a) {
      for (int q = 0; q < 3; ++q) {
        stepper.calc(a + gx[q] * (hi - a), X);
        stencil_geometry(spec, st, X, geo, nullptr);
        inner_integrand(st, geo, Ik);
        for (int k = 0; k < 9; ++k) A[k] += gw[q] * (hi - a) * Ik[k];
      }
    }
    while (next < want.size() && want[next].t <= b) {
      stepper.calc(want[next].t, X);
      const int tag = want[next].tag;
      if (tag < 3) {
        stencil_geometry(spec, st, X, geo, nullptr);
        inner_integrand(st, geo, Ik);
        for (int k = 0; k < 9; ++k) A[k] += gw[tag] * rs * Ik[k];
      } else {
        stencil_geometry(spec, st, X, geo_at[tag - 3], nullptr);
      }
      ++next;
    }
    if (stepper.state()[2 * kD] < 2e-12) fail(ErrorKind::Validation, "ray reaches the guard shell");
  }

  std::array<double, 3> Ic{};
  for (int w = 0; w < 3; ++w) {
    inner_integrand(st, geo_at[w], Ik);
    Ic[w] = Ik[4];
  }
  const std::vector<RayGeom>& G = geo_at[1];
  const RayGeom& c = G[st.idx(0, 0)];
  const double phi = 1.0 / std::sqrt(c.J);
  const double phi1 = -0.5 * phi * c.l1;
  const double phi2 = phi * (0.75 * c.l1 * c.l1 - 0.5 * c.l2);
  const double Ac = A[4];
  const double dI = (Ic[2] - Ic[0]) / (2 * eta);
  const double U1p = phi1 * Ac + phi * Ic[1];
  const double U1pp = phi2 * Ac + 2.0 * phi1 * Ic[1] + phi * dI;
  auto U1hat = [&](int i, int j) { return A[(i + 1) * 3 + (j + 1)] / std::sqrt(G[st.idx(i, j)].J); };
  const double ang = ang_lap<double>(st, G, 0, 0, U1hat);

  RayAmplitudes out;
  out.r = r;
  out.z = c.z;
  out.J = c.J;
  out.U0 = phi / (4.0 * kPi);
  out.A = Ac;
  out.U1hat = phi * Ac;
  out.I = Ic[1];
  out.Q = -U1pp - c.l1 * U1p + ang + (c.x2W - 1.0) * out.U1hat;
  return out;
}

double u0(const MetricSpec& spec, const BallPoint& zp, const Vec& theta, double r) {
  check_3d(spec);
  return 1.0 / (4.0 * kPi * std::sqrt(jacobi_density(spec, zp, theta, r)));
}

cplx u1(const MetricSpec& spec, cplx sigma, const BallPoint& zp, const Vec& theta, double r,
        const StencilOptions& opt) {
  if (sigma == cplx(0.0, 0.0)) fail(ErrorKind::Validation, "U1 needs sigma != 0");
  const RayAmplitudes ra = ray_amplitudes(spec, zp, theta, r, opt);
  return ra.U1hat * cplx(0.0, 1.0) / (8.0 * kPi * sigma);
}

cplx laplace_apply(const MetricSpec& spec, const BallPoint& zp, const PolarFunction& f, const Vec& theta0,
                   double r, double eta, const StencilOptions& opt) {
  check_3d(spec);
  if (!(eta > 0.0) || !(r - eta > 0.0))
    fail(ErrorKind::Validation, "radial stencil leaves the chart (need r - eta > 0)");
  const Stencil st = make_stencil(spec, zp, theta0, 1, opt.eps);
  OdeOptions oo;
  oo.rel_tol = opt.rel_tol;
  oo.abs_tol = opt.abs_tol;
  oo.dt0 = std::min(1e-3, r / 8);
  DenseStepper stepper(stencil_rhs(spec, st), st.init, 0.0, oo);
  State X(st.init.size());
  std::vector<RayGeom> geo;
  stepper.advance_to(r);
  stepper.calc(r, X);
  stencil_geometry(spec, st, X, geo, nullptr);
  const RayGeom& c = geo[st.idx(0, 0)];
  const Vec& th = st.theta0;
  const cplx fm = f(r - eta, th), f0 = f(r, th), fp = f(r + eta, th);
  const cplx d1 = (fp - fm) / (2 * eta);
  const cplx d2 = (fp - 2.0 * f0 + fm) / (eta * eta);
  auto fa = [&](int i, int j) { return f(r, st.theta[st.idx(i, j)]); };
  const cplx ang = ang_lap<cplx>(st, geo, 0, 0, fa);
  return -d2 - c.l1 * d1 + ang;
}

PolarPair polar_coordinates(const MetricSpec& spec, const BallPoint& z, const BallPoint& zp) {
  const DistanceResult dr = distance_flow(spec, zp, z);
  const Mat g = metric_eval(spec, zp.coords());
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  const Mat gh = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  return {dr.distance, (gh * dr.velocity).normalized()};
}

PairAmplitudes pair_amplitudes(const MetricSpec& spec, const BallPoint& z, const BallPoint& zp,
                               const StencilOptions& opt) {
  const PolarPair pp = polar_coordinates(spec, z, zp);
  const RayAmplitudes ra = ray_amplitudes(spec, zp, pp.theta, pp.r, opt);
  return {pp.r, ra.U0, ra.U1hat, ra.Q};
}

cplx parametrix_from(const PairAmplitudes& a, const SpectralPoint& sp) {
  const cplx phase = std::exp(cplx(0.0, -1.0) * sp.sigma * a.r / sp.h);
  const cplx U1 = a.U1hat * cplx(0.0, 1.0) / (8.0 * kPi * sp.sigma);
  return phase / (sp.h * sp.h) * (a.U0 + sp.h * U1);
}

cplx error_from(const PairAmplitudes& a, const SpectralPoint& sp) {
  const cplx phase = std::exp(cplx(0.0, -1.0) * sp.sigma * a.r / sp.h);
  return sp.h * phase * a.Q * cplx(0.0, 1.0) / (8.0 * kPi * sp.sigma);
}

cplx parametrix_kernel(const MetricSpec& spec, const SpectralPoint& sp, const BallPoint& z, const BallPoint& zp) {
  sp.validate();
  return parametrix_from(pair_amplitudes(spec, z, zp), sp);
}

cplx error_kernel(const MetricSpec& spec, const SpectralPoint& sp, const BallPoint& z, const BallPoint& zp) {
  sp.validate();
  return error_from(pair_amplitudes(spec, z, zp), sp);
}

std::vector<KernelDumpRow> kernel_dump(const MetricSpec& spec, const SpectralPoint& sp,
                                       const std::vector<std::pair<BallPoint, BallPoint>>& pairs) {
  sp.validate();
  std::vector<KernelDumpRow> rows;
  rows.reserve(pairs.size());
  for (const auto& [z, zp] : pairs) {
    const PairAmplitudes a = pair_amplitudes(spec, z, zp);
    const BoundaryTriple bt = boundary_triple(z, zp);
    rows.push_back({z.coords(), zp.coords(), parametrix_from(a, sp), error_from(a, sp), a.r, bt.rho_l, bt.rho_r});
  }
  return rows;
}

}  // namespace rl
