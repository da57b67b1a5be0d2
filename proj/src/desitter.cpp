#include "rl/desitter.hpp"

#include <algorithm>
#include <cmath>

#include "rl/errors.hpp"
#include "rl/types.hpp"

namespace rl {

namespace {

double smoothstep5(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

// Quantity equal to vH near r_H and vI near r_I, blended through the
// midpoint value on the two fixed windows.
double blend(const DSSModel& M, double r, double vH, double vI) {
  const double D = M.r_I - M.r_H, vM = 0.5 * (vH + vI);
  const double u1 = (r - (M.r_H + 0.2 * D)) / (0.2 * D);
  const double u2 = (r - (M.r_H + 0.6 * D)) / (0.2 * D);
  return vH + (vM - vH) * smoothstep5(u1) + (vI - vM) * smoothstep5(u2);
}

double polish_root(double r, double p, double q) {
  for (int k = 0; k < 50; ++k) {
    const double f = (r * r + p) * r + q, df = 3.0 * r * r + p;
    if (df == 0.0) break;
    const double step = f / df;
    r -= step;
    if (std::abs(step) <= 1e-16 * std::abs(r)) break;
  }
  return r;
}

}  // namespace

Horizons horizons(double m, double Lambda) {
  if (!(m > 0.0) || !(Lambda > 0.0) || !std::isfinite(m) || !std::isfinite(Lambda))
    fail(ErrorKind::Validation, "de Sitter-Schwarzschild model needs m > 0 and Lambda > 0");
  const double e = 9.0 * m * m * Lambda;
  Horizons h;
  if (std::abs(e - 1.0) <= 1e-12) {
    h.r_H = h.r_I = 3.0 * m;
    h.r_neg = -6.0 * m;
    h.degenerate = true;
    return h;
  }
  if (e > 1.0) fail(ErrorKind::Validation, "9 m^2 Lambda >= 1: alpha^2 has no two positive roots");
  // r^3 + p r + q = 0 with three real roots.
  const double p = -3.0 / Lambda, q = 6.0 * m / Lambda;
  const double A = 2.0 * std::sqrt(-p / 3.0);
  const double th = std::acos(std::clamp(1.5 * q / p * std::sqrt(-3.0 / p), -1.0, 1.0));
  double roots[3];
  for (int k = 0; k < 3; ++k) roots[k] = polish_root(A * std::cos(th / 3.0 - 2.0 * kPi * k / 3.0), p, q);
  std::sort(roots, roots + 3);
  h.r_neg = roots[0];
  h.r_H = roots[1];
  h.r_I = roots[2];
  return h;
}

double beta_at(const DSSModel& M, double r) {
  if (!(r > 0.0)) fail(ErrorKind::Validation, "beta_at needs r > 0");
  return M.m / (r * r) - M.Lambda * r / 3.0;
}

double DSSModel::alpha2(double r) const { return alpha2(r, r - r_H, r_I - r); }

double DSSModel::alpha2(double r, double dH, double dI) const {
  return Lambda / (3.0 * r) * dH * dI * (r - r_neg);
}

DSSModel make_dss_model(double m, double Lambda, int n) {
  if (n < 2) fail(ErrorKind::Validation, "sphere dimension n must be at least 2");
  const Horizons h = horizons(m, Lambda);
  if (h.degenerate) fail(ErrorKind::Validation, "degenerate horizons (9 m^2 Lambda = 1): no interior region");
  DSSModel M;
  M.m = m;
  M.Lambda = Lambda;
  M.n = n;
  M.r_H = h.r_H;
  M.r_I = h.r_I;
  M.r_neg = h.r_neg;
  M.beta_H = beta_at(M, M.r_H);
  M.beta_I = beta_at(M, M.r_I);
  M.beta_neg = M.m / (M.r_neg * M.r_neg) - M.Lambda * M.r_neg / 3.0;
  M.r_peak = std::cbrt(3.0 * m / Lambda);
  M.alpha_peak = std::sqrt(M.alpha2(M.r_peak));
  return M;
}

double x_of_r(const DSSModel& M, double r) {
  if (r < M.r_H || r > M.r_I) fail(ErrorKind::Validation, "x_of_r needs r in [r_H, r_I]");
  const double cH = 1.0 / (2.0 * M.r_H * M.beta_H), cI = 1.0 / (2.0 * M.r_I * std::abs(M.beta_I));
  return std::sqrt(std::max(M.alpha2(r), 0.0)) * blend(M, r, cH, cI);
}

double log_tilde_alpha(const DSSModel& M, double r) {
  if (!(r > M.r_H && r < M.r_I)) fail(ErrorKind::Validation, "tilde_alpha needs r in (r_H, r_I)");
  const double p = blend(M, r, 1.0 / M.beta_H, 1.0 / std::abs(M.beta_I));
  return p * (0.5 * std::log(M.alpha2(r)) - std::log(M.alpha_peak));
}

double log_tilde_alpha(const DSSModel& M, const TortoisePoint& p) {
  const double q = blend(M, p.r, 1.0 / M.beta_H, 1.0 / std::abs(M.beta_I));
  return q * (0.5 * std::log(M.alpha2(p.r, p.dH, p.dI)) - std::log(M.alpha_peak));
}

double tilde_alpha(const DSSModel& M, double r, double b) { return std::exp(b * log_tilde_alpha(M, r)); }

ModeCoefficients mode_coefficients(const DSSModel& M, int ell, int samples) {
  if (ell < 0) fail(ErrorKind::Validation, "ell must be nonnegative");
  if (samples < 2) fail(ErrorKind::Validation, "need at least two radial samples");
  ModeCoefficients c;
  c.ell = ell;
  c.angular_eigenvalue = static_cast<double>(ell) * (ell + M.n - 1);
  const double D = M.r_I - M.r_H;
  for (int k = 0; k < samples; ++k) {
    const double r = M.r_H + (k + 0.5) / samples * D;
    c.r.push_back(r);
    c.alpha2.push_back(M.alpha2(r));
    c.beta.push_back(beta_at(M, r));
  }
  return c;
}

namespace {

// r near the given end with alpha = c x, returned with its distance to the horizon.
struct EndPoint {
  double r, d;
};
EndPoint r_from_alpha2(const DSSModel& M, End end, double a2) {
  const double be = end == End::H ? M.beta_H : M.beta_I;
  double d = a2 / (2.0 * std::abs(be));
  for (int k = 0; k < 60; ++k) {
    const double r = end == End::H ? M.r_H + d : M.r_I - d;
    const double dH = end == End::H ? d : (M.r_I - M.r_H) - d;
    const double dI = end == End::H ? (M.r_I - M.r_H) - d : d;
    const double f = M.alpha2(r, dH, dI) - a2;
    const double df = 2.0 * beta_at(M, r) * (end == End::H ? 1.0 : -1.0);
    const double step = f / df;
    d -= step;
    if (std::abs(step) <= 1e-16 * d) break;
  }
  return {end == End::H ? M.r_H + d : M.r_I - d, d};
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0, my = 0;
  const double N = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += std::log(xs[i]) / N;
    my += std::log(ys[i]) / N;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxy += dx * (std::log(ys[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace

EndCheckReport model_end_check(const DSSModel& M, End end, double tol, int ell) {
  if (ell < 0) fail(ErrorKind::Validation, "ell must be nonnegative");
  const int n = M.n;
  const double be = end == End::H ? M.beta_H : M.beta_I;
  const double re = end == End::H ? M.r_H : M.r_I;
  const double c = 2.0 * re * std::abs(be);  // alpha = c x
  const double lam = static_cast<double>(ell) * (ell + n - 1);
  EndCheckReport rep;
  std::vector<double> curv;
  for (double s : {0.05, 0.02, 0.01, 0.005, 0.002, 0.001}) {
    // Bump in t = log x of half-width 1 centred at log s.
    double worst = 0.0, worst_curv = 0.0;
    const int K = 401;
    for (int k = 1; k < K - 1; ++k) {
      const double u = -1.0 + 2.0 * k / (K - 1);
      const double w = 1.0 - u * u;
      const double f = std::exp(-1.0 / w);
      const double g1 = -2.0 * u / (w * w), g2 = -2.0 / (w * w) - 8.0 * u * u / (w * w * w);
      const double ft = f * g1, ftt = f * (g2 + g1 * g1);
      const double x = s * std::exp(u);
      const EndPoint ep = r_from_alpha2(M, end, c * c * x * x);
      const double r = ep.r, a2 = c * c * x * x;
      const double b = beta_at(M, r), db = -2.0 * M.m / (r * r * r) - M.Lambda / 3.0;
      // d(beta r^n)/dt with dr/dt = alpha^2 / beta.
      const double Fp = a2 / b * (db * std::pow(r, n) + n * b * std::pow(r, n - 1));
      const double disc = (be - b) * (be + b) * (ftt - n * ft + 0.25 * n * n * f) -
                          b * std::pow(r, -n) * Fp * (ft - 0.5 * n * f) + (a2 / (r * r) - 4.0 * be * be * x * x) * lam * f;
      worst = std::max(worst, std::abs(disc));
      worst_curv = std::max(worst_curv, std::abs(1.0 / (b * b) - 1.0 / (be * be)));
    }
    rep.scales.push_back(s);
    rep.discrepancies.push_back(worst / std::exp(-1.0));
    curv.push_back(worst_curv);
  }
  rep.exponent = fit_slope(rep.scales, rep.discrepancies);
  rep.curvature_exponent = fit_slope(rep.scales, curv);
  rep.limit_ratio = rep.discrepancies.back() / (rep.scales.back() * rep.scales.back());
  rep.ok = rep.exponent >= 2.0 - tol && std::isfinite(rep.limit_ratio);
  rep.message = rep.ok ? "end model matches to O(x^2)" : "discrepancy decays slower than x^2";
  return rep;
}

double tortoise_of_r(const DSSModel& M, double r) {
  if (!(r > M.r_H && r < M.r_I)) fail(ErrorKind::Validation, "tortoise_of_r needs r in (r_H, r_I)");
  auto raw = [&](double rr, double dH, double dI) {
    return std::log(dH) / (2.0 * M.beta_H) + std::log(dI) / (2.0 * M.beta_I) +
           std::log(rr - M.r_neg) / (2.0 * M.beta_neg);
  };
  return raw(r, r - M.r_H, M.r_I - r) - raw(M.r_peak, M.r_peak - M.r_H, M.r_I - M.r_peak);
}

TortoisePoint r_of_tortoise(const DSSModel& M, double rs) {
  if (!std::isfinite(rs)) fail(ErrorKind::Validation, "r_of_tortoise needs a finite argument");
  const bool nearH = rs <= 0.0;
  const double D = M.r_I - M.r_H;
  const double base = std::log(M.r_peak - M.r_H) / (2.0 * M.beta_H) +
                      std::log(M.r_I - M.r_peak) / (2.0 * M.beta_I) +
                      std::log(M.r_peak - M.r_neg) / (2.0 * M.beta_neg);
  // y = log of the distance to the nearer horizon.
  auto point = [&](double y) {
    TortoisePoint p;
    const double d = std::exp(y);
    p.dH = nearH ? d : D - d;
    p.dI = nearH ? D - d : d;
    p.r = nearH ? M.r_H + d : M.r_I - d;
    return p;
  };
  auto phi = [&](const TortoisePoint& p) {
    return std::log(p.dH) / (2.0 * M.beta_H) + std::log(p.dI) / (2.0 * M.beta_I) +
           std::log(p.r - M.r_neg) / (2.0 * M.beta_neg) - base - rs;
  };
  // phi is increasing in y near H and decreasing in y near I.
  const double sgn = nearH ? 1.0 : -1.0;
  double y_hi = std::log(nearH ? M.r_peak - M.r_H : M.r_I - M.r_peak);
  const double rate = nearH ? 2.0 * M.beta_H : 2.0 * std::abs(M.beta_I);
  double y_lo = y_hi - rate * std::abs(rs) - 1.0;
  while (sgn * phi(point(y_lo)) > 0.0) y_lo -= 1.0 + rate * std::abs(rs);
  double y = std::clamp(y_hi - rate * std::abs(rs), y_lo, y_hi);
  for (int it = 0; it < 200; ++it) {
    TortoisePoint p = point(y);
    const double f = sgn * phi(p);
    if (f > 0.0) y_hi = y; else y_lo = y;
    const double a2 = M.alpha2(p.r, p.dH, p.dI);
    const double df = std::exp(y) / a2;  // |dr_*/dy|
    double ny = y - f / df;
    if (!(ny > y_lo && ny < y_hi)) ny = 0.5 * (y_lo + y_hi);
    if (std::abs(ny - y) <= 1e-15 * std::max(1.0, std::abs(y)) || y_hi - y_lo < 1e-15 * std::max(1.0, std::abs(y))) {
      y = ny;
      break;
    }
    y = ny;
  }
  TortoisePoint p = point(y);
  p.alpha2 = M.alpha2(p.r, p.dH, p.dI);
  p.beta = beta_at(M, p.r);
  return p;
}

}  // namespace rl
