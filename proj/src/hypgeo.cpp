#include "rl/hypgeo.hpp"

#include <cmath>
#include <string>

#include "rl/errors.hpp"

namespace rl {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NoConvergence: return "no_convergence";
    case ErrorKind::ConjugatePoint: return "conjugate_point";
    case ErrorKind::ModelValidity: return "model_validity";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::NearResonance: return "near_resonance";
  }
  return "unknown";
}

BallPoint::BallPoint(const Vec& coords) : z_(coords) {
  if (z_.size() < 2 || z_.size() > kMaxDim)
    fail(ErrorKind::Validation, "BallPoint: dimension must be in [2, 4]");
  if (!z_.allFinite() || z_.squaredNorm() >= 1.0)
    fail(ErrorKind::Validation, "BallPoint: point is not strictly inside the unit ball");
}

BallPoint::BallPoint(std::initializer_list<double> coords) {
  Vec v(static_cast<Eigen::Index>(coords.size()));
  int i = 0;
  for (double c : coords) v(i++) = c;
  *this = BallPoint(v);
}

double BallPoint::x() const { return bdf_x(z_); }

double bdf_x(const Vec& z) {
  const double r = z.norm();
  return (1.0 - r) / (1.0 + r);
}

double acosh1p(double u) {
  if (u < 1e-8) {
    // acosh(1+u) = sqrt(2u) (1 - u/12 + 3u^2/160 - ...)
    return std::sqrt(2.0 * u) * (1.0 - u / 12.0 + 3.0 * u * u / 160.0);
  }
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

namespace {

void same_dim(const BallPoint& a, const BallPoint& b) {
  if (a.dim() != b.dim())
    fail(ErrorKind::Validation, "two-point operation on points of different dimension");
}

}  // namespace

double dist0_closed(const BallPoint& z, const BallPoint& zp) {
  same_dim(z, zp);
  const double num = 2.0 * (z.coords() - zp.coords()).squaredNorm();
  const double den = (1.0 - z.norm2()) * (1.0 - zp.norm2());
  return acosh1p(num / den);
}

BoundaryTriple boundary_triple(const BallPoint& z, const BallPoint& zp) {
  same_dim(z, zp);
  const double a = 1.0 - z.norm2();
  const double b = 1.0 - zp.norm2();
  const double R = std::sqrt(a * a + b * b + (z.coords() - zp.coords()).squaredNorm());
  return {a / R, b / R, R};
}

double log_structure_F(const BallPoint& z, const BallPoint& zp) {
  same_dim(z, zp);
  if ((z.coords() - zp.coords()).squaredNorm() == 0.0)
    fail(ErrorKind::Singular, "log_structure_F: F is singular on the diagonal");
  // Normalized so that sqrt(2) rho_L = sqrt(2) rho_R = 1 on the lifted diagonal,
  // which makes F vanish there.
  const BoundaryTriple t = boundary_triple(z, zp);
  return dist0_closed(z, zp) + std::log(2.0 * t.rho_l * t.rho_r);
}

double exp_dist_from_triple(const BallPoint& z, const BallPoint& zp) {
  const BoundaryTriple t = boundary_triple(z, zp);
  const double f = (z.coords() - zp.coords()).squaredNorm() / (t.front * t.front);
  const double q = f / (t.rho_l * t.rho_r);
  return 1.0 + 2.0 * q + std::sqrt(4.0 * q + 4.0 * q * q);
}

}  // namespace rl
