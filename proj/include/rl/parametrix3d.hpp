#pragma once

// Semiclassical parametrix of h^2(Delta_g + x^2 W - 1) - sigma^2 on the
// 3-ball: amplitudes from the transport equations and the error kernel.
//
// All amplitudes live in geodesic polar coordinates (r, theta) about a base
// point z'. Angular derivatives come from a small square stencil of rays
// around the central direction, theta(u) = normalize(theta0 + u1 e1 + u2 e2),
// integrated jointly with their Jacobi fields so every ray shares the same
// radial steps.

#include <functional>
#include <string>
#include <vector>

#include "rl/hamflow.hpp"

namespace rl {

struct SpectralPoint {
  double h = 0.1;
  cplx sigma{1.5, 0.0};
  cplx lambda_full() const { return sigma / h; }
  void validate() const;
};

struct StencilOptions {
  double eps = 0.1;      // angular stencil spacing in the u chart
  double eta = 1e-3;     // radial finite-difference step
  double r_start = 5e-2; // [0, r_start] of the transport integral uses one Gauss rule
  double rel_tol = 1e-13;
  double abs_tol = 1e-15;
};

/// e^{-i sigma r} / (4 pi sinh r). Throws Singular at r = 0.
cplx exact_h3_kernel(cplx sigma, double r);

/// Amplitude data along one geodesic, independent of h and sigma.
struct RayAmplitudes {
  double r = 0.0;
  Vec z;             // endpoint of the geodesic
  double J = 0.0;    // normalized volume density
  double U0 = 0.0;   // J^{-1/2} / (4 pi)
  double A = 0.0;    // integral_0^r J^{1/2} (Delta + x^2 W - 1) J^{-1/2} ds
  double U1hat = 0.0;  // J^{-1/2} A; U1 = U1hat * i / (8 pi sigma)
  double Q = 0.0;    // (Delta + x^2 W - 1) U1hat at the endpoint
  double I = 0.0;    // integrand J^{1/2}(Delta + x^2 W - 1)J^{-1/2} at the endpoint
};

/// Integrates the ray stencil about zp in direction theta0 out to radius r.
RayAmplitudes ray_amplitudes(const MetricSpec& spec, const BallPoint& zp, const Vec& theta0, double r,
                             const StencilOptions& opt = {});

double u0(const MetricSpec& spec, const BallPoint& zp, const Vec& theta, double r);
/// Throws Validation when sigma = 0.
cplx u1(const MetricSpec& spec, cplx sigma, const BallPoint& zp, const Vec& theta, double r,
        const StencilOptions& opt = {});

/// A function on the polar chart about zp: f(r, theta) with theta a unit vector.
using PolarFunction = std::function<cplx(double r, const Vec& theta)>;

/// Delta_g f at (r, theta0) by centered differences: radial step eta, angular
/// spacing opt.eps. Throws Validation when r - eta <= 0.
cplx laplace_apply(const MetricSpec& spec, const BallPoint& zp, const PolarFunction& f, const Vec& theta0,
                   double r, double eta, const StencilOptions& opt = {});

/// Geometry of the pair (z, zp): distance and the unit polar direction at zp.
struct PolarPair {
  double r;
  Vec theta;
};
PolarPair polar_coordinates(const MetricSpec& spec, const BallPoint& z, const BallPoint& zp);

/// h-independent part of the kernels at (z, zp).
struct PairAmplitudes {
  double r = 0.0;
  double U0 = 0.0;
  double U1hat = 0.0;
  double Q = 0.0;
};
PairAmplitudes pair_amplitudes(const MetricSpec& spec, const BallPoint& z, const BallPoint& zp,
                               const StencilOptions& opt = {});

/// G = e^{-i sigma r/h} h^{-2} (U0 + h U1) from precomputed amplitudes.
cplx parametrix_from(const PairAmplitudes& a, const SpectralPoint& sp);
/// E = h e^{-i sigma r/h} (Delta + x^2 W - 1) U1 from precomputed amplitudes.
cplx error_from(const PairAmplitudes& a, const SpectralPoint& sp);

cplx parametrix_kernel(const MetricSpec& spec, const SpectralPoint& sp, const BallPoint& z, const BallPoint& zp);
cplx error_kernel(const MetricSpec& spec, const SpectralPoint& sp, const BallPoint& z, const BallPoint& zp);

/// One CSV row per pair: z..., z'..., Re G, Im G, Re E, Im E, r, rho_L, rho_R.
struct KernelDumpRow {
  Vec z, zp;
  cplx G, E;
  double r, rho_l, rho_r;
};
std::vector<KernelDumpRow> kernel_dump(const MetricSpec& spec, const SpectralPoint& sp,
                                       const std::vector<std::pair<BallPoint, BallPoint>>& pairs);

}  // namespace rl
