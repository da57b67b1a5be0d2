#pragma once

// Per-mode radial resolvent of the twisted Laplacian in Schrodinger form
// -w'' + V w = sigma^2 w on the tortoise line, with w = r^{n/2} u. The
// resolvent (Delta_X - sigma^2)^{-1} is holomorphic for Im sigma < 0; the
// outgoing solutions w_H ~ e^{i sigma r_*} (r_* -> -inf) and
// w_I ~ e^{-i sigma r_*} (r_* -> +inf) continue analytically upward, and
// resonances are the zeros of their Wronskian.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rl/desitter.hpp"
#include "rl/schur.hpp"
#include "rl/types.hpp"

namespace rl {

struct TortoiseGrid {
  std::optional<DSSModel> model;  // empty for synthetic potentials
  int ell = 0;
  double L = 0.0;
  double kappa_minus = 1.0, kappa_plus = 1.0;  // exponential decay rates of V at -inf, +inf
  std::vector<double> r_star, r, V;            // reporting samples on [-L, L]
  double tail = 0.0;                           // max |V(+-L)|
  std::function<double(double)> potential;

  double V_at(double rs) const { return potential(rs); }
};

/// Tortoise grid for the given mode. L = 0 picks the smallest L with
/// exp(-2 min(beta_H, |beta_I|) L) <= 1e-12. Throws Accuracy when |V(+-L)| >= 1e-10.
TortoiseGrid tortoise(const DSSModel& M, int ell, double L = 0.0, int samples = 2001);
/// Synthetic grid with a given potential (used for checks, e.g. V = 0).
TortoiseGrid synthetic_grid(std::function<double(double)> V, double L, double kappa_minus = 1.0,
                            double kappa_plus = 1.0);

/// V_ell(r) = (n/2) alpha^2 [ (n/2 - 1) alpha^2 / r^2 + 2 beta / r ] + alpha^2 ell (ell + n - 1) / r^2.
double mode_potential(const DSSModel& M, int ell, const TortoisePoint& p);

struct ModeSolution {
  std::vector<double> s;
  std::vector<cplx> w, dw;
};

/// Outgoing solution at the given end, sampled at the (increasing) nodes.
ModeSolution outgoing_solution(const TortoiseGrid& G, cplx sigma, End end, const std::vector<double>& nodes);

struct WronskianResult {
  cplx W;
  double drift = 0.0;  // relative variation over the check points
};
/// W = w_H w_I' - w_H' w_I at r_* = 0, checked at r_* = +-5. Throws Accuracy
/// when the drift exceeds 1e-6.
WronskianResult wronskian(const TortoiseGrid& G, cplx sigma);

struct ResonanceZero {
  cplx sigma;
  int multiplicity = 1;
  double residual = 0.0;  // |W| at the refined point
};
struct QnmScanResult {
  std::vector<ResonanceZero> zeros;
  int count = 0;        // winding number of the full rectangle
  int evaluations = 0;  // Wronskian evaluations
};
/// Argument-principle count on [re_lo, re_hi] x [im_lo, im_hi] with
/// recursive subdivision and Newton refinement to tol.
QnmScanResult qnm_scan(const TortoiseGrid& G, double re_lo, double re_hi, double im_lo, double im_hi,
                       double tol = 1e-8);

/// Green kernel -w_H(min) w_I(max) / W on uniform nodes in [-Ln, Ln] with
/// trapezoid weights, in the representation w = r^{n/2} u where the measure
/// Omega becomes dr_*. Throws NearResonance when W is tiny relative to the solutions.
KernelGrid mode_green(const TortoiseGrid& G, cplx sigma, double Ln, double spacing);

struct NormScanOptions {
  double b = 0.25;
  double gamma = 0.02;
  std::optional<double> logN;  // psi_N = (1 + log^2 tilde_alpha)^{-N/2} on both sides
  double Ln = 0.0;             // 0: chosen from the weight decay
  double spacing = 0.0;        // 0: min(0.05, 0.6 / |sigma|)
  std::vector<double> re_sigma;
};
struct NormScanPoint {
  cplx sigma;
  cplx wronskian;
  double norm = 0.0;
  bool resonant = false;
};
struct ModeResolventScan {
  int ell = 0;
  NormScanOptions options;
  std::vector<NormScanPoint> points;
  double growth_exponent = 0.0;  // least-squares slope of log norm vs log |Re sigma| over the upper half
};

/// Weighted norm ||tilde_alpha^b G tilde_alpha^b|| along Im sigma = gamma.
/// Requires 0 < gamma < min(beta_H, |beta_I|, 1) and b > gamma, or b = gamma with logN > 1/2.
ModeResolventScan norm_scan(const TortoiseGrid& G, const NormScanOptions& opt);

/// Weighted L2 norm of the mode resolvent at one sigma (no window checks).
double mode_resolvent_norm(const TortoiseGrid& G, cplx sigma, double b, std::optional<double> logN, double Ln,
                           double spacing);

}  // namespace rl
