#pragma once

// Weighted L2 operator norms on the hyperbolic 3-ball: quadrature grids,
// kernel matrices, the four-case Schur bound, and Neumann-series assembly of
// the resolvent from the parametrix.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "rl/parametrix3d.hpp"

namespace rl {

using CMatrix = Eigen::MatrixXcd;

/// Product grid in geodesic polar coordinates about the origin of the 3-ball.
/// Radial variable t = -log x (the distance to 0) uses Gauss-Legendre panels
/// [k w, (k+1) w]; directions are icosphere vertices with equal weights.
struct BallGrid {
  std::vector<Vec> z;
  std::vector<double> w;  // volume weights for dg
  std::vector<double> x;  // boundary defining function (1-|z|)/(1+|z|)
  std::vector<int> rad, dir;
  std::vector<double> t_nodes;
  std::vector<Vec> dirs;
  int size() const { return static_cast<int>(z.size()); }
};

/// Icosphere vertices: level 0, 1, 2 give 12, 42, 162 unit vectors.
std::vector<Vec> icosphere(int level);

BallGrid make_ball_grid(int panels, int nodes_per_panel, int sphere_level, double panel_width = 0.6931471805599453);

struct WeightSpec {
  double a = 0.0;  // left power x^a
  double b = 0.0;  // right power x'^b
  double logN_left = 0.0;
  double logN_right = 0.0;
};

/// Smoothed log weight <log x>^{-N} = (1 + log^2 x)^{-N/2}.
double log_weight(double x, double N);

struct KernelGrid {
  std::vector<double> wl, wr;  // quadrature weights
  std::vector<double> xl, xr;  // boundary defining values at the nodes
  CMatrix K;                   // K(z_i, z'_j)
  WeightSpec weight;

  /// Throws Validation on size mismatch or nonpositive weights.
  void validate() const;
  /// D_l^{1/2} w_l K w_r D_r^{1/2}: the matrix whose 2-norm is the L2 norm.
  CMatrix l2_matrix() const;
};

/// Largest singular value: dense SVD below 4000 rows, power iteration above.
double matrix_norm2(const CMatrix& A);
/// Power iteration on A^* A from a fixed seed.
double power_norm2(const CMatrix& A, int max_iter = 2000, double tol = 1e-13);
double grid_norm(const KernelGrid& K);

/// Returns nullopt for DIVERGENT (borderline exponent without a log weight
/// N > 1/2). Throws Validation when alpha or beta is below n/2 or C < 0.
/// The constant is sqrt(C1 C2) from a numerical Schur test on the model
/// kernel rho_L^alpha rho_R^beta with test function x^{n/2} <log x>^{-N/2},
/// truncated at distance t_max from the origin.
std::optional<double> schur_bound(double alpha, double beta, double C, int n, std::optional<double> logN,
                                  double t_max = 16.0);

/// sup over z of the weighted row integral of the model kernel with test
/// function x^{n/2}, truncated at t_max. Grows without bound in t_max at a
/// borderline exponent when no log weight is present.
double schur_row_sup(double alpha, double beta, int n, double logN_left, double logN_right, double t_max);

/// h-independent amplitudes for every ordered pair of grid nodes. Uses a
/// rotation cache when the metric data is isotropic.
struct AmplitudeTable {
  int N = 0;
  std::vector<PairAmplitudes> amps;  // row-major (i, j); diagonal has r = 0
  int distinct_pairs = 0;
  const PairAmplitudes& at(int i, int j) const { return amps[static_cast<std::size_t>(i) * N + j]; }
};
AmplitudeTable compute_amplitudes(const MetricSpec& spec, const BallGrid& grid, const StencilOptions& opt = {});

KernelGrid parametrix_grid(const AmplitudeTable& T, const BallGrid& grid, const SpectralPoint& sp,
                           const WeightSpec& w = {});
KernelGrid error_grid(const AmplitudeTable& T, const BallGrid& grid, const SpectralPoint& sp,
                      const WeightSpec& w = {});

/// Norm of x^{-b} E x^{b}. Requires Im(sigma)/h < b < 2 - Im(sigma)/h; at
/// the lower end b = Im(sigma)/h a log weight N > 1/2 must be supplied.
double weighted_error_norm(const AmplitudeTable& T, const BallGrid& grid, const SpectralPoint& sp, double b,
                           double logN = 0.0);

struct AssembledResolvent {
  KernelGrid R;          // kernel of x^a R x^b
  double norm = 0.0;     // its L2 norm
  double e_norm = 0.0;   // ||x^{-b} E x^b||
  double g_norm = 0.0;   // ||x^a G x^b||
  double residual = 0.0; // ||X (I + E_w) - G_w|| / ||G_w|| in the l2 representation
};

/// x^a R x^b = x^a G x^b (I + x^{-b} E x^b)^{-1}. G and E must be unweighted
/// grids on the same nodes. Throws ModelValidity when ||x^{-b} E x^b|| >= 1.
AssembledResolvent resolvent_assemble(const KernelGrid& G, const KernelGrid& E, double a, double b);

}  // namespace rl
