#pragma once

// de Sitter-Schwarzschild radial model: alpha^2 = 1 - 2m/r - Lambda r^2 / 3,
// its horizons and surface gravities, the end-rescaled boundary defining
// function, the weight tilde-alpha, and the tortoise coordinate.

#include <string>
#include <vector>

namespace rl {

struct Horizons {
  double r_H = 0.0, r_I = 0.0, r_neg = 0.0;  // r_neg = -(r_H + r_I), the unphysical root
  bool degenerate = false;                   // 9 m^2 Lambda = 1 within 1e-12: r_H = r_I = 3m
};

/// Positive roots of 1 - 2m/r - Lambda r^2/3. Throws Validation unless m, Lambda > 0
/// and 9 m^2 Lambda <= 1 (up to 1e-12, which is reported as degenerate).
Horizons horizons(double m, double Lambda);

struct DSSModel {
  double m = 1.0, Lambda = 0.1;
  int n = 2;  // sphere dimension
  double r_H = 0.0, r_I = 0.0, r_neg = 0.0;
  double beta_H = 0.0, beta_I = 0.0, beta_neg = 0.0;
  double r_peak = 0.0;   // where alpha^2 is maximal (beta = 0)
  double alpha_peak = 0.0;

  /// alpha^2 in factored form, accurate to full relative precision near the roots.
  double alpha2(double r) const;
  /// alpha^2 from the distances to both horizons (dH = r - r_H, dI = r_I - r).
  double alpha2(double r, double dH, double dI) const;
};

/// Throws Validation for a degenerate or invalid parameter pair.
DSSModel make_dss_model(double m, double Lambda, int n = 2);

/// beta(r) = (1/2) d(alpha^2)/dr = m / r^2 - Lambda r / 3.
double beta_at(const DSSModel& M, double r);

/// Boundary defining function with alpha = 2 r_H beta_H x near r_H and
/// alpha = 2 r_I |beta_I| x near r_I, blended by quintic smoothsteps on
/// [r_H + 0.2 D, r_H + 0.4 D] and [r_H + 0.6 D, r_H + 0.8 D], D = r_I - r_H.
double x_of_r(const DSSModel& M, double r);

/// (alpha / alpha_peak)^{p(r)} raised to the power b, with p = 1/beta_H near r_H,
/// 1/|beta_I| near r_I (same blend windows as x_of_r).
double tilde_alpha(const DSSModel& M, double r, double b = 1.0);
/// log of tilde_alpha(M, r, 1), computed without underflow.
double log_tilde_alpha(const DSSModel& M, double r);

struct ModeCoefficients {
  int ell = 0;
  double angular_eigenvalue = 0.0;  // ell (ell + n - 1)
  std::vector<double> r, alpha2, beta;
};
ModeCoefficients mode_coefficients(const DSSModel& M, int ell, int samples = 201);

enum class End { H, I };

struct EndCheckReport {
  bool ok = false;
  double exponent = 0.0;          // fitted power of x in the discrepancy
  double limit_ratio = 0.0;       // discrepancy / x^2 at the smallest scale
  double curvature_exponent = 0.0;// power of x in 1/beta^2 - 1/beta_end^2
  std::vector<double> scales, discrepancies;
  std::string message;
};

/// Compares x^{n/2} Delta_X x^{-n/2} with the hyperbolic end model
/// Delta_{g_end} - beta_end^2 n^2/4 on test functions concentrated at x ~ s,
/// for the given spherical-harmonic degree. Passes if the fitted exponent of
/// the discrepancy in s is at least 2 - tol.
EndCheckReport model_end_check(const DSSModel& M, End end, double tol = 0.1, int ell = 1);

/// Tortoise coordinate r_* with dr_*/dr = alpha^{-2}, normalized so r_*(r_peak) = 0.
double tortoise_of_r(const DSSModel& M, double r);

struct TortoisePoint {
  double r = 0.0, dH = 0.0, dI = 0.0;  // r and its distances to the horizons
  double alpha2 = 0.0, beta = 0.0;
};
/// Inverse of tortoise_of_r, resolving r - r_H and r_I - r to full relative precision.
TortoisePoint r_of_tortoise(const DSSModel& M, double rs);
/// log tilde_alpha at a point given with its horizon distances (no cancellation near the ends).
double log_tilde_alpha(const DSSModel& M, const TortoisePoint& p);

}  // namespace rl
