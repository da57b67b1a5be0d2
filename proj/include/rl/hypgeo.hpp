#pragma once

// Closed-form hyperbolic geometry on the Poincare ball B^{n+1}.

#include "rl/types.hpp"

namespace rl {

/// A point strictly inside the unit ball, stored in the Euclidean chart.
class BallPoint {
 public:
  BallPoint() = default;
  /// Throws Validation unless 2 <= dim <= kMaxDim and |coords| < 1.
  explicit BallPoint(const Vec& coords);
  BallPoint(std::initializer_list<double> coords);

  const Vec& coords() const { return z_; }
  int dim() const { return static_cast<int>(z_.size()); }
  double norm2() const { return z_.squaredNorm(); }
  /// Boundary defining function x = (1-|z|)/(1+|z|).
  double x() const;

 private:
  Vec z_;
};

struct BoundaryTriple {
  double rho_l;
  double rho_r;
  double front;  // R
};

/// Boundary defining function x = (1-|z|)/(1+|z|) of a chart vector.
double bdf_x(const Vec& z);

/// arccosh(1 + u) for u >= 0, accurate for small u.
double acosh1p(double u);

double dist0_closed(const BallPoint& z, const BallPoint& zp);

/// (rho_L, rho_R, R) with R^2 = (1-|z|^2)^2 + (1-|z'|^2)^2 + |z-z'|^2.
BoundaryTriple boundary_triple(const BallPoint& z, const BallPoint& zp);

/// F = d(z,z') + log(2 rho_L rho_R); zero on the diagonal, positive and bounded
/// off it. Throws Singular when z == z'.
double log_structure_F(const BallPoint& z, const BallPoint& zp);

/// exp(d) rebuilt from the blown-up data: 1 + 2f/(rho_L rho_R) + sqrt(4f/(rho_L rho_R) + 4f^2/(rho_L rho_R)^2)
/// with f = |z-z'|^2 / R^2.
double exp_dist_from_triple(const BallPoint& z, const BallPoint& zp);

}  // namespace rl
