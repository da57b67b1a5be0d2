#include "rl/metric.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "rl/errors.hpp"

namespace rl {

namespace {

// psi(t) = exp(-1/t) for t > 0 with derivatives. Below 1e-3 the values are
// far below double precision relative to the partner term, so they are zero.
void psi(double t, double& v, double& d1, double& d2) {
  if (t < 1e-3) {
    v = d1 = d2 = 0.0;
    return;
  }
  v = std::exp(-1.0 / t);
  const double t2 = t * t;
  d1 = v / t2;
  d2 = v * (1.0 / (t2 * t2) - 2.0 / (t2 * t));
}

void check_spd(const Mat& g) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::ModelValidity, "perturbed metric is not positive definite");
}

}  // namespace

void MetricSpec::validate() const {
  if (n < 1 || n > kMaxDim - 1) fail(ErrorKind::Validation, "n must be in [1, 3]");
  if (!(delta >= 0.0) || !(delta < 1.0)) fail(ErrorKind::Validation, "delta must satisfy 0 <= delta < 1");
}

MetricSpec make_metric_spec(int n, double delta, const std::string& H, const std::string& W) {
  MetricSpec s;
  s.n = n;
  s.delta = delta;
  s.validate();
  s.H = make_tensor_field(H, n + 1);
  s.W = make_scalar_field(W, n + 1);
  return s;
}

double chi_profile(double s, double* d1, double* d2) {
  double a, ad, add, b, bd, bdd;
  psi(1.0 - s, a, ad, add);
  psi(s - 0.5, b, bd, bdd);
  const double S = a + b;
  // a(s) = psi(1-s): a' = -psi'(1-s), a'' = psi''(1-s)
  const double as = -ad, ass = add;
  const double Ss = as + bd, Sss = ass + bdd;
  const double chi = a / S;
  const double num = as * S - a * Ss;
  if (d1) *d1 = num / (S * S);
  if (d2) *d2 = (ass * S - a * Sss) / (S * S) - 2.0 * Ss * num / (S * S * S);
  return chi;
}

Mat metric_eval(const MetricSpec& spec, const Vec& z) {
  const int d = static_cast<int>(z.size());
  const double s = 1.0 - z.squaredNorm();
  if (!(s > 0.0)) fail(ErrorKind::Validation, "point is not interior to the unit ball");
  Mat g = (4.0 / (s * s)) * Mat::Identity(d, d);
  if (spec.unperturbed()) return g;
  const double r = z.norm();
  const double chi = chi_profile((1.0 - r) / spec.delta);
  if (chi == 0.0) return g;
  g += chi * spec.H->jet(z).value;
  check_spd(g);
  return g;
}

MetricJet metric_jet(const MetricSpec& spec, const Vec& z, bool second) {
  return metric_jet(spec, z, 1.0 - z.squaredNorm(), second);
}

MetricJet metric_jet(const MetricSpec& spec, const Vec& z, double s, bool second) {
  const int d = static_cast<int>(z.size());
  if (!(s > 0.0)) fail(ErrorKind::Validation, "point is not interior to the unit ball");
  MetricJet J;
  const Mat id = Mat::Identity(d, d);
  const double s2 = s * s, s3 = s2 * s, s4 = s2 * s2;
  J.g = (4.0 / s2) * id;
  for (int k = 0; k < d; ++k) {
    J.dg[k] = (16.0 * z(k) / s3) * id;
    if (second)
      for (int l = 0; l < d; ++l)
        J.ddg[k][l] = ((k == l ? 16.0 / s3 : 0.0) + 96.0 * z(k) * z(l) / s4) * id;
  }
  if (spec.unperturbed()) return J;

  const double r = z.norm();
  double c1 = 0.0, c2 = 0.0;
  const double u = s / (1.0 + r) / spec.delta;
  const double chi = chi_profile(u, &c1, &c2);
  if (chi == 0.0 && c1 == 0.0 && c2 == 0.0) return J;

  // chi_delta(z) = chi(u(z)), u = (1-|z|)/delta; r > 1 - delta > 0 here.
  Vec du(d);
  for (int k = 0; k < d; ++k) du(k) = -z(k) / (spec.delta * r);
  const TensorJet H = spec.H->jet(z);
  J.g += chi * H.value;
  for (int k = 0; k < d; ++k) {
    J.dg[k] += chi * H.d[k] + (c1 * du(k)) * H.value;
    if (!second) continue;
    for (int l = 0; l < d; ++l) {
      const double ddu = -((k == l ? 1.0 : 0.0) / r - z(k) * z(l) / (r * r * r)) / spec.delta;
      const double chi_kl = c2 * du(k) * du(l) + c1 * ddu;
      J.ddg[k][l] += chi * H.dd[k][l] + (c1 * du(k)) * H.d[l] + (c1 * du(l)) * H.d[k] + chi_kl * H.value;
    }
  }
  check_spd(J.g);
  return J;
}

}  // namespace rl
