#pragma once

// Cutoff family near the two horizons and a discrete check of the resolvent
// decomposition into an interior part and two end-model resolvents, done
// per spherical-harmonic mode on a uniform tortoise grid.

#include <array>
#include <vector>

#include "rl/desitter.hpp"
#include "rl/schur.hpp"
#include "rl/types.hpp"

namespace rl {

enum class Cutoff { Chi1, Chi1_1, ChiT1, Chi2, Chi2_1, ChiT2, Chi3, Chi };
inline constexpr int kCutoffCount = 8;

struct CutoffJet {
  double v = 0.0, d1 = 0.0, d2 = 0.0;  // value and r-derivatives
};

struct CutoffFamily {
  DSSModel model;
  double delta = 0.0;
  std::vector<double> r;
  std::vector<std::array<double, kCutoffCount>> values;  // samples on r

  CutoffJet eval(Cutoff which, double r) const;
};

/// Quintic smoothstep cutoffs with plateaus at r_H + k delta and r_I - k delta.
/// Throws Validation unless 0 < 8 delta < r_I - r_H.
CutoffFamily cutoffs(const DSSModel& M, double delta, int samples = 1001);

struct GlueOptions {
  double delta = 0.0;  // 0: (r_I - r_H) / 12
  double L = 40.0;     // tortoise window [-L, L] with Dirichlet ends
  double h = 1.25e-4;  // grid spacing
};

struct GlueResiduals {
  double residentity1 = 0.0;
  double residentity2 = 0.0;
  double brpkid = 0.0;          // with the end-model correction term A2 M2
  double brpkid_literal = 0.0;  // the decomposition without that term
  int grid_size = 0;
  double h = 0.0;
};

/// Relative residuals of the three identities on a fixed set of test vectors.
/// Commutators with the cutoffs are discretized from the product rule, so the
/// residuals measure the discretization error of the stencil.
GlueResiduals gluing_residual(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt = {});

struct EndResolvents {
  KernelGrid R_H, R_I;
};
/// Dense inverses of the two flattened-end model operators (use coarse h).
EndResolvents model_end_resolvents(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt = {});

/// max |R_H - beta_H^{-2} R_1(sigma / beta_H)| / max |R_H|, where R_1 is the
/// unit-curvature model discretized on the rescaled grid.
double end_scaling_residual(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt = {});

/// Relative difference between each end model and the full mode operator on
/// test functions supported where their coefficients coincide.
double end_locality_residual(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt = {});

struct MNorms {
  cplx sigma;
  double m1 = 0.0, m2 = 0.0;
};
/// L2 operator norms of M1(sigma) and M2(sigma).
MNorms m_norms(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt = {});

}  // namespace rl
