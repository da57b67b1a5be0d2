#pragma once

// Geodesic flow of the perturbed metric, shooting distance, Jacobi-field
// volume density, and the model flow in upper half-space coordinates.

#include <string>
#include <vector>

#include "rl/hypgeo.hpp"
#include "rl/metric.hpp"
#include "rl/ode.hpp"

namespace rl {

/// Points with |z| > 1 - kGuardShell stop the integration.
inline constexpr double kGuardShell = 1e-12;

struct GeodesicSample {
  double t;
  Vec z;
  Vec v;
  double energy;  // g(v, v)
  double s;       // 1 - |z|^2, integrated directly for accuracy near the boundary
};

struct GeodesicPath {
  std::vector<GeodesicSample> samples;
  double energy = 1.0;         // initial g(v, v); 1 after normalization
  double max_rel_drift = 0.0;  // max |g(v,v)/energy - 1| over accepted steps
  bool truncated = false;      // hit the guard shell before T
};

// State layout shared by every ray integration:
//   z (d), v (d), s = 1-|z|^2, then m pairs (Y_a, Y_a') of d entries each.
inline int ray_state_size(int d, int m) { return 2 * d + 1 + 2 * d * m; }

/// Geodesic acceleration a(z, v) from the metric jet.
Vec geodesic_accel(const MetricJet& J, const Vec& v);

/// Second derivative of a Jacobi field: D_z a[Y] + D_v a[U] with U = Y'.
Vec jacobi_accel(const MetricJet& J, const Vec& v, const Vec& a, const Vec& Y, const Vec& U);

/// Variants taking a precomputed inverse metric.
Vec geodesic_accel(const MetricJet& J, const Mat& ginv, const Vec& v);
Vec jacobi_accel(const MetricJet& J, const Mat& ginv, const Vec& v, const Vec& a, const Vec& Y, const Vec& U);

/// Ray right-hand side in the layout above.
void ray_rhs(const MetricSpec& spec, int d, int m, const double* x, double* dx);

/// Unit-speed geodesic from z0 in direction v0 for arclength T >= 0.
/// Samples are taken at nsamples equally spaced times (plus the exit time if
/// the guard shell is reached first).
GeodesicPath geodesic_shoot(const MetricSpec& spec, const BallPoint& z0, const Vec& v0, double T,
                            int nsamples = 101, const OdeOptions& opt = {});

struct DistanceResult {
  double distance;
  Vec direction;  // unit Euclidean initial direction at z
  Vec velocity;   // initial velocity of the time-one connecting geodesic (g-length = distance)
  int iterations;
};

/// Boundary-value shooting for the connecting geodesic. Throws NoConvergence.
DistanceResult distance_flow(const MetricSpec& spec, const BallPoint& z, const BallPoint& zp);

/// g^{-1/2} at z: maps Euclidean unit vectors to g-unit vectors.
Mat metric_frame(const Mat& g);

/// Euclidean orthonormal basis of the complement of the unit vector theta.
Mat transverse_basis(const Vec& theta);

/// Normalized volume density J(r, theta) in geodesic polar coordinates about zp.
/// Throws ConjugatePoint if the Jacobi determinant changes sign.
double jacobi_density(const MetricSpec& spec, const BallPoint& zp, const Vec& direction, double r);

struct HalfspaceState {
  double x = 1.0;
  Vec y;
  double lambda = 0.0;
  Vec mu;
};

struct HalfspaceSample {
  double t;
  HalfspaceState s;
  double energy2;  // lambda^2 + |mu|^2
};

/// Model Hamilton flow x' = x lambda, y' = x mu, lambda' = -|mu|^2, mu' = lambda mu.
/// Negative T integrates backwards.
std::vector<HalfspaceSample> halfspace_flow0(const HalfspaceState& s, double T, int nsamples = 101);

struct DeltaReport {
  bool ok = true;
  int shots = 0;
  int failures = 0;
  double min_density_ratio = 0.0;  // min J / sinh^n r over all shots
  std::string message;
};

/// Empirical smallness check for delta: shoots Jacobi fields from a fixed set
/// of base points and directions out to arclength r_max and runs a few
/// distance solves, counting conjugate points and Newton failures.
DeltaReport validate_delta(const MetricSpec& spec, double r_max = 6.0, int directions = 12);

}  // namespace rl
