#include "rl/hamflow.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <random>

#include "rl/errors.hpp"

namespace rl {

namespace {

constexpr double kGuardS = 2.0 * kGuardShell - kGuardShell * kGuardShell;  // 1 - (1-eps)^2

Mat dir_derivative(const MetricJet& J, const Vec& u) {
  const int d = static_cast<int>(u.size());
  Mat m = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) m += u(k) * J.dg[k];
  return m;
}

Vec accel_with_inverse(const MetricJet& J, const Mat& ginv, const Vec& v) {
  const int d = static_cast<int>(v.size());
  Vec w(d);
  for (int l = 0; l < d; ++l) w(l) = v.dot(J.dg[l] * v);
  return -ginv * (dir_derivative(J, v) * v - 0.5 * w);
}

Vec jacobi_with_inverse(const MetricJet& J, const Mat& ginv, const Vec& v, const Vec& a, const Vec& Y,
                        const Vec& U) {
  const int d = static_cast<int>(v.size());
  const Mat dYg = dir_derivative(J, Y);
  const Mat dvg = dir_derivative(J, v);
  const Mat dUg = dir_derivative(J, U);
  Mat dYdvg = Mat::Zero(d, d);
  Vec zterm = dYg * a;
  Vec vterm = dUg * v + dvg * U;
  for (int l = 0; l < d; ++l) {
    Mat dYdl = Mat::Zero(d, d);
    for (int k = 0; k < d; ++k) dYdl += Y(k) * J.ddg[k][l];
    dYdvg += v(l) * dYdl;
    zterm(l) -= 0.5 * v.dot(dYdl * v);
    vterm(l) -= v.dot(J.dg[l] * U);
  }
  zterm += dYdvg * v;
  return -ginv * (zterm + vterm);
}

Vec seg(const double* x, int off, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = x[off + i];
  return v;
}

double energy_of(const MetricSpec& spec, const Vec& z, double s, const Vec& v) {
  const MetricJet J = metric_jet(spec, z, s, false);
  return v.dot(J.g * v);
}

State pack_start(const Vec& z, const Vec& v, int m) {
  const int d = static_cast<int>(z.size());
  State x(ray_state_size(d, m), 0.0);
  for (int i = 0; i < d; ++i) {
    x[i] = z(i);
    x[d + i] = v(i);
  }
  x[2 * d] = 1.0 - z.squaredNorm();
  return x;
}

}  // namespace

Vec geodesic_accel(const MetricJet& J, const Vec& v) { return accel_with_inverse(J, J.g.inverse(), v); }
Vec geodesic_accel(const MetricJet& J, const Mat& ginv, const Vec& v) { return accel_with_inverse(J, ginv, v); }
Vec jacobi_accel(const MetricJet& J, const Mat& ginv, const Vec& v, const Vec& a, const Vec& Y, const Vec& U) {
  return jacobi_with_inverse(J, ginv, v, a, Y, U);
}

Vec jacobi_accel(const MetricJet& J, const Vec& v, const Vec& a, const Vec& Y, const Vec& U) {
  return jacobi_with_inverse(J, J.g.inverse(), v, a, Y, U);
}

void ray_rhs(const MetricSpec& spec, int d, int m, const double* x, double* dx) {
  const Vec z = seg(x, 0, d);
  const Vec v = seg(x, d, d);
  const double s = x[2 * d];
  const MetricJet J = metric_jet(spec, z, s, m > 0);
  const Mat ginv = J.g.inverse();
  const Vec a = accel_with_inverse(J, ginv, v);
  for (int i = 0; i < d; ++i) {
    dx[i] = v(i);
    dx[d + i] = a(i);
  }
  dx[2 * d] = -2.0 * z.dot(v);
  for (int f = 0; f < m; ++f) {
    const int off = 2 * d + 1 + 2 * d * f;
    const Vec Y = seg(x, off, d);
    const Vec U = seg(x, off + d, d);
    const Vec acc = jacobi_with_inverse(J, ginv, v, a, Y, U);
    for (int i = 0; i < d; ++i) {
      dx[off + i] = U(i);
      dx[off + d + i] = acc(i);
    }
  }
}

GeodesicPath geodesic_shoot(const MetricSpec& spec, const BallPoint& z0, const Vec& v0, double T, int nsamples,
                            const OdeOptions& opt) {
  spec.validate();
  const int d = z0.dim();
  if (v0.size() != d) fail(ErrorKind::Validation, "velocity dimension does not match the point");
  if (!(v0.norm() > 0.0)) fail(ErrorKind::Validation, "initial velocity must be nonzero");
  if (!std::isfinite(T) || T < 0.0) fail(ErrorKind::Validation, "T must be finite and nonnegative");
  if (nsamples < 2) nsamples = 2;

  const Vec& z = z0.coords();
  const double e0 = energy_of(spec, z, 1.0 - z.squaredNorm(), v0);
  const Vec v = v0 / std::sqrt(e0);
  OdeRhs rhs = [&spec, d](const State& x, State& dx, double) { ray_rhs(spec, d, 0, x.data(), dx.data()); };

  GeodesicPath path;
  path.energy = 1.0;
  auto record = [&](double t, const State& x) {
    GeodesicSample smp{t, seg(x.data(), 0, d), seg(x.data(), d, d), 0.0, x[2 * d]};
    smp.energy = energy_of(spec, smp.z, x[2 * d], smp.v);
    path.samples.push_back(std::move(smp));
  };

  State x0 = pack_start(z, v, 0);
  record(0.0, x0);
  if (T == 0.0) return path;

  DenseStepper st(rhs, x0, 0.0, opt);
  State tmp(x0.size());
  int next = 1;
  while (next < nsamples) {
    st.step();
    const State& xs = st.state();
    const Vec zc = seg(xs.data(), 0, d);
    path.max_rel_drift =
        std::max(path.max_rel_drift, std::abs(energy_of(spec, zc, xs[2 * d], seg(xs.data(), d, d)) - 1.0));
    const double t_hi = std::min(st.t(), T);
    if (xs[2 * d] < kGuardS) {
      // Locate the guard-shell crossing inside the last step.
      double lo = st.t_prev(), hi = st.t();
      for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        st.calc(mid, tmp);
        (tmp[2 * d] < kGuardS ? hi : lo) = mid;
      }
      while (next < nsamples) {
        const double tn = T * next / (nsamples - 1);
        if (tn > lo) break;
        st.calc(tn, tmp);
        record(tn, tmp);
        ++next;
      }
      st.calc(lo, tmp);
      record(lo, tmp);
      path.truncated = true;
      return path;
    }
    while (next < nsamples) {
      const double tn = (next == nsamples - 1) ? T : T * next / (nsamples - 1);
      if (tn > t_hi) break;
      st.calc(tn, tmp);
      record(tn, tmp);
      ++next;
    }
  }
  return path;
}

namespace {

// Time-one geodesic from z with initial velocity w. With `jac` the Jacobian
// dz(1)/dw is returned as well. False when the path reaches the guard shell.
bool shoot_time1(const MetricSpec& spec, const Vec& z, const Vec& w, bool jac, Vec& end, Mat* D) {
  const int d = static_cast<int>(z.size());
  const int m = jac ? d : 0;
  State x = pack_start(z, w, m);
  for (int f = 0; f < m; ++f) x[2 * d + 1 + 2 * d * f + d + f] = 1.0;
  OdeRhs rhs = [&spec, d, m](const State& s, State& dx, double) { ray_rhs(spec, d, m, s.data(), dx.data()); };
  DenseStepper st(rhs, x, 0.0);
  try {
    while (st.t() < 1.0) {
      st.step();
      if (st.state()[2 * d] < kGuardS) return false;
    }
  } catch (const Error&) {
    return false;
  }
  State xe(x.size());
  st.calc(1.0, xe);
  end = seg(xe.data(), 0, d);
  if (D) {
    D->resize(d, d);
    for (int f = 0; f < d; ++f) D->col(f) = seg(xe.data(), 2 * d + 1 + 2 * d * f, d);
  }
  return true;
}

}  // namespace

DistanceResult distance_flow(const MetricSpec& spec, const BallPoint& zb, const BallPoint& zpb) {
  spec.validate();
  if (zb.dim() != zpb.dim()) fail(ErrorKind::Validation, "points have different dimensions");
  const Vec& z = zb.coords();
  const Vec& zp = zpb.coords();
  if ((z - zp).norm() == 0.0) fail(ErrorKind::Singular, "distance_flow needs distinct points");

  // Unperturbed initial guess: the ball isometry sending z to 0 has
  // differential I/(1-|z|^2) at z, so the initial direction is the direction
  // of the image of z' and the speed follows from g0(w, w) = d0^2.
  const double a2 = z.squaredNorm();
  const Vec diff = zp - z;
  const Vec img = (1.0 - a2) * diff - diff.squaredNorm() * z;
  const double d0 = dist0_closed(zb, zpb);
  Vec w = img.normalized() * (d0 * (1.0 - a2) / 2.0);

  Vec end;
  Mat D;
  if (!shoot_time1(spec, z, w, true, end, &D))
    fail(ErrorKind::NoConvergence, "initial shot left the ball");
  double res = (end - zp).norm();
  int it = 0;
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-10;
  while (res >= kTol) {
    if (++it > kMaxIter) fail(ErrorKind::NoConvergence, "shooting Newton did not converge in 50 iterations");
    const Vec step = D.fullPivLu().solve(zp - end);
    if (!step.allFinite()) fail(ErrorKind::NoConvergence, "singular shooting Jacobian (conjugate point?)");
    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h, alpha *= 0.5) {
      const Vec wt = w + alpha * step;
      Vec et;
      Mat Dt;
      if (!shoot_time1(spec, z, wt, true, et, &Dt)) continue;
      const double rt = (et - zp).norm();
      if (rt < res) {
        w = wt;
        end = et;
        D = Dt;
        res = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) fail(ErrorKind::NoConvergence, "damped Newton step failed to reduce the endpoint mismatch");
  }
  const MetricJet J = metric_jet(spec, z, false);
  return {std::sqrt(w.dot(J.g * w)), w.normalized(), w, it};
}

Mat metric_frame(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Mat transverse_basis(const Vec& theta) {
  const int d = static_cast<int>(theta.size());
  Mat col = theta;
  Eigen::HouseholderQR<Mat> qr(col);
  Mat Q = qr.householderQ();
  return Q.rightCols(d - 1);
}

double jacobi_density(const MetricSpec& spec, const BallPoint& zpb, const Vec& direction, double r) {
  spec.validate();
  const int d = zpb.dim();
  const int m = d - 1;
  if (direction.size() != d || !(direction.norm() > 0.0))
    fail(ErrorKind::Validation, "direction must be a nonzero vector of the point's dimension");
  if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::Validation, "r must be positive");
  const Vec theta = direction.normalized();
  const Vec& z = zpb.coords();
  const Mat F = metric_frame(metric_eval(spec, z));
  const Mat E = transverse_basis(theta);
  State x = pack_start(z, F * theta, m);
  for (int f = 0; f < m; ++f) {
    const Vec Up = F * E.col(f);
    for (int i = 0; i < d; ++i) x[2 * d + 1 + 2 * d * f + d + i] = Up(i);
  }
  auto frame_det = [&](const State& s) {
    Mat M(d, d);
    for (int f = 0; f < m; ++f) M.col(f) = seg(s.data(), 2 * d + 1 + 2 * d * f, d);
    M.col(m) = seg(s.data(), d, d);
    return M.determinant();
  };
  Mat M0(d, d);
  M0.leftCols(m) = F * E;
  M0.col(m) = F * theta;
  const double sign0 = M0.determinant() > 0 ? 1.0 : -1.0;

  OdeRhs rhs = [&spec, d, m](const State& s, State& dx, double) { ray_rhs(spec, d, m, s.data(), dx.data()); };
  DenseStepper st(rhs, x, 0.0);
  while (st.t() < r) {
    st.step();
    if (st.state()[2 * d] < kGuardS) fail(ErrorKind::Validation, "r reaches the guard shell");
    if (frame_det(st.state()) * sign0 <= 0.0)
      fail(ErrorKind::ConjugatePoint, "Jacobi determinant vanished: conjugate point along the geodesic");
  }
  State xe(x.size());
  st.calc(r, xe);
  const Vec ze = seg(xe.data(), 0, d);
  const Mat g = metric_jet(spec, ze, xe[2 * d], false).g;
  Mat Y(d, m);
  for (int f = 0; f < m; ++f) Y.col(f) = seg(xe.data(), 2 * d + 1 + 2 * d * f, d);
  const double det = (Y.transpose() * g * Y).determinant();
  if (!(det > 0.0)) fail(ErrorKind::ConjugatePoint, "degenerate Jacobi matrix");
  return std::sqrt(det);
}

std::vector<HalfspaceSample> halfspace_flow0(const HalfspaceState& s0, double T, int nsamples) {
  const int n = static_cast<int>(s0.y.size());
  if (s0.mu.size() != n) fail(ErrorKind::Validation, "y and mu must have the same length");
  if (!(s0.x > 0.0)) fail(ErrorKind::Validation, "x must be positive");
  if (!std::isfinite(T)) fail(ErrorKind::Validation, "T must be finite");
  if (nsamples < 2) nsamples = 2;
  const double sgn = T < 0 ? -1.0 : 1.0;
  // State: log x, y, lambda, mu. Carrying log x keeps relative accuracy as x -> 0.
  OdeRhs rhs = [n, sgn](const State& u, State& du, double) {
    const double x = std::exp(u[0]);
    const double lam = u[n + 1];
    double mu2 = 0.0;
    for (int i = 0; i < n; ++i) mu2 += u[n + 2 + i] * u[n + 2 + i];
    du[0] = sgn * lam;
    for (int i = 0; i < n; ++i) {
      du[1 + i] = sgn * x * u[n + 2 + i];
      du[n + 2 + i] = sgn * lam * u[n + 2 + i];
    }
    du[n + 1] = -sgn * mu2;
  };
  State u(2 * n + 2);
  u[0] = std::log(s0.x);
  for (int i = 0; i < n; ++i) {
    u[1 + i] = s0.y(i);
    u[n + 2 + i] = s0.mu(i);
  }
  u[n + 1] = s0.lambda;
  auto unpack = [n](double t, const State& v) {
    HalfspaceSample smp;
    smp.t = t;
    smp.s.x = std::exp(v[0]);
    smp.s.y = Vec(n);
    smp.s.mu = Vec(n);
    for (int i = 0; i < n; ++i) {
      smp.s.y(i) = v[1 + i];
      smp.s.mu(i) = v[n + 2 + i];
    }
    smp.s.lambda = v[n + 1];
    smp.energy2 = smp.s.lambda * smp.s.lambda + smp.s.mu.squaredNorm();
    return smp;
  };
  std::vector<HalfspaceSample> out;
  out.push_back(unpack(0.0, u));
  if (T == 0.0) return out;
  OdeOptions opt;
  opt.rel_tol = 1e-12;
  DenseStepper st(rhs, u, 0.0, opt);
  const double tau_end = std::abs(T);
  State tmp(u.size());
  for (int k = 1; k < nsamples; ++k) {
    const double tau = (k == nsamples - 1) ? tau_end : tau_end * k / (nsamples - 1);
    while (st.t() < tau) st.step();
    st.calc(tau, tmp);
    out.push_back(unpack(sgn * tau, tmp));
  }
  return out;
}

DeltaReport validate_delta(const MetricSpec& spec, double r_max, int directions) {
  spec.validate();
  const int d = spec.dim();
  DeltaReport rep;
  rep.min_density_ratio = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<Vec> bases;
  for (double rad : {0.0, 0.5, 0.8}) {
    Vec b = Vec::Zero(d);
    b(0) = rad;
    bases.push_back(b);
  }
  for (const Vec& b : bases) {
    for (int k = 0; k < directions; ++k) {
      Vec th(d);
      do {
        for (int i = 0; i < d; ++i) th(i) = U(rng);
      } while (th.norm() < 0.1 || th.norm() > 1.0);
      th.normalize();
      ++rep.shots;
      try {
        const BallPoint bp(b);
        const double J = jacobi_density(spec, bp, th, r_max);
        rep.min_density_ratio = std::min(rep.min_density_ratio, J / std::pow(std::sinh(r_max), d - 1));
        // Uniqueness probe: re-solve the distance to a point on the shot.
        const double rr = std::min(r_max, 3.0);
        const GeodesicPath p = geodesic_shoot(spec, bp, metric_frame(metric_eval(spec, b)) * th, rr, 2);
        if (!p.truncated) {
          const DistanceResult dr = distance_flow(spec, bp, BallPoint(p.samples.back().z));
          if (std::abs(dr.distance - rr) > 1e-6 * rr) {
            ++rep.failures;
            rep.message = "shooting found a different geodesic";
          }
        }
      } catch (const Error& e) {
        ++rep.failures;
        rep.message = e.what();
      }
    }
  }
  rep.ok = rep.failures == 0;
  return rep;
}

}  // namespace rl
