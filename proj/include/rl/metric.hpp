#pragma once

// The perturbed Poincare metric g = 4|dz|^2/(1-|z|^2)^2 + chi_delta(z) H(z)
// on the unit ball, together with its first and second derivatives.

#include "rl/fields.hpp"
#include "rl/hypgeo.hpp"
#include "rl/types.hpp"

namespace rl {

struct MetricSpec {
  int n = 2;             // boundary dimension; the ball has dimension n+1
  double delta = 0.0;    // cutoff scale, 0 disables the perturbation
  TensorFieldPtr H;      // null means zero
  ScalarFieldPtr W;      // null means zero

  int dim() const { return n + 1; }
  /// Throws Validation on inconsistent input.
  void validate() const;
  bool unperturbed() const { return delta == 0.0 || !H || H->is_zero(); }
  double potential(const Vec& z) const { return W ? W->value(z) : 0.0; }
};

/// Builds a spec from registry names ("zero", "bump:0.1", "file:...").
MetricSpec make_metric_spec(int n, double delta, const std::string& H, const std::string& W);

/// Cutoff profile: 1 for s < 1/2, 0 for s > 1, smooth in between.
/// Fills the first and second derivatives when the pointers are non-null.
double chi_profile(double s, double* d1 = nullptr, double* d2 = nullptr);

struct MetricJet {
  Mat g;
  Mat dg[kMaxDim];
  Mat ddg[kMaxDim][kMaxDim];
};

/// Metric matrix only. Throws ModelValidity if it is not positive definite.
Mat metric_eval(const MetricSpec& spec, const Vec& z);
/// Metric with derivatives. When `second` is false ddg is left empty.
MetricJet metric_jet(const MetricSpec& spec, const Vec& z, bool second = true);
/// Same, with s = 1-|z|^2 supplied by the caller. Integrators carry s as its
/// own state variable so it keeps full relative accuracy near the boundary.
MetricJet metric_jet(const MetricSpec& spec, const Vec& z, double s, bool second);

}  // namespace rl
