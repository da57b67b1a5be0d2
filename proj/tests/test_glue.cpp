#include <doctest.h>

#include <cmath>

#include "rl/errors.hpp"
#include "rl/glue.hpp"

using namespace rl;

namespace {

const DSSModel& model() {
  static const DSSModel M = make_dss_model(1.0, 0.1);
  return M;
}

}  // namespace

TEST_CASE("cutoff plateaus, range and the defining formula for chi_3") {
  const DSSModel& M = model();
  const double d = (M.r_I - M.r_H) / 12.0;
  const CutoffFamily F = cutoffs(M, d);
  CHECK(F.eval(Cutoff::Chi1, M.r_H + 2.99 * d).v == 0.0);
  CHECK(F.eval(Cutoff::Chi1, M.r_H + 4.01 * d).v == 1.0);
  CHECK(F.eval(Cutoff::Chi1_1, M.r_H + 0.99 * d).v == 0.0);
  CHECK(F.eval(Cutoff::Chi1_1, M.r_H + 2.01 * d).v == 1.0);
  CHECK(F.eval(Cutoff::ChiT1, M.r_H + 4.99 * d).v == 0.0);
  CHECK(F.eval(Cutoff::ChiT1, M.r_H + 6.01 * d).v == 1.0);
  CHECK(F.eval(Cutoff::Chi2, M.r_I - 2.99 * d).v == 0.0);
  CHECK(F.eval(Cutoff::Chi2, M.r_I - 4.01 * d).v == 1.0);
  CHECK(F.eval(Cutoff::Chi, M.r_H + 0.5 * d).v == 1.0);
  CHECK(F.eval(Cutoff::Chi, M.r_I - 0.5 * d).v == 1.0);
  CHECK(F.eval(Cutoff::Chi, M.r_H + 0.2 * d).v == 0.0);
  for (std::size_t i = 0; i < F.r.size(); ++i) {
    const auto& v = F.values[i];
    for (double c : v) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
    const double c1 = v[0], c11 = v[1], c2 = v[3], c21 = v[4];
    CHECK(std::abs(v[6] - (1.0 - (1.0 - c1) * (1.0 - c11) - (1.0 - c2) * (1.0 - c21))) < 1e-14);
  }
  CHECK_THROWS_AS(cutoffs(M, (M.r_I - M.r_H) / 7.9), Error);
}

TEST_CASE("cutoff derivatives match difference quotients") {
  const DSSModel& M = model();
  const CutoffFamily F = cutoffs(M, (M.r_I - M.r_H) / 12.0, 11);
  const double e = 1e-6;
  for (int k = 0; k < kCutoffCount; ++k) {
    for (int i = 1; i < 200; ++i) {
      const double r = M.r_H + (i + 0.37) * (M.r_I - M.r_H) / 200.0;  // off the ramp edges
      const auto w = static_cast<Cutoff>(k);
      const CutoffJet j = F.eval(w, r);
      const double fd1 = (F.eval(w, r + e).v - F.eval(w, r - e).v) / (2 * e);
      const double fd2 = (F.eval(w, r + e).d1 - F.eval(w, r - e).d1) / (2 * e);
      CHECK(std::abs(j.d1 - fd1) < 1e-5 * (1.0 + std::abs(j.d1)));
      CHECK(std::abs(j.d2 - fd2) < 1e-4 * (1.0 + std::abs(j.d2)));
    }
  }
}

TEST_CASE("end models: scaling law and locality") {
  GlueOptions o;
  o.h = 0.05;
  CHECK(end_scaling_residual(model(), 1, cplx(2.0, -0.05), o) < 1e-8);
  CHECK(end_locality_residual(model(), 1, cplx(2.0, -0.05), o) < 1e-6);
  const EndResolvents R = model_end_resolvents(model(), 1, cplx(2.0, -0.05), o);
  for (const KernelGrid* K : {&R.R_H, &R.R_I}) {
    CHECK(std::isfinite(matrix_norm2(K->l2_matrix())));
    CHECK((K->K - K->K.transpose()).cwiseAbs().maxCoeff() < 1e-12 * K->K.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("identity residuals converge at second order") {
  for (int ell : {0, 2}) {
    GlueOptions o;
    o.h = 4e-3;
    const GlueResiduals a = gluing_residual(model(), ell, cplx(2.0, -0.05), o);
    o.h = 2e-3;
    const GlueResiduals b = gluing_residual(model(), ell, cplx(2.0, -0.05), o);
    CHECK(std::log2(a.residentity1 / b.residentity1) >= 1.9);
    CHECK(std::log2(a.residentity2 / b.residentity2) >= 1.9);
    CHECK(std::log2(a.brpkid / b.brpkid) >= 1.9);
    CHECK(b.residentity1 / b.residentity2 < 10.0);
    CHECK(b.residentity2 / b.residentity1 < 10.0);
    // Without the end-model term A2 M2 the decomposition does not hold.
    CHECK(b.brpkid_literal > 0.1);
  }
}

TEST_CASE("fine-grid residuals for ell = 0, sigma = 2 - 0.01i") {
  const GlueResiduals r = gluing_residual(model(), 0, cplx(2.0, -0.01));
  CHECK(r.residentity1 < 1e-8);
  CHECK(r.residentity2 < 1e-8);
  CHECK(r.brpkid < 1e-8);
}

TEST_CASE("M1 and M2 grow at most linearly along Im sigma = gamma") {
  GlueOptions o;
  o.h = 4e-3;
  std::vector<double> ls, lm;
  for (double re : {2.0, 4.0, 8.0}) {
    const MNorms m = m_norms(model(), 1, cplx(re, 0.02), o);
    CHECK(std::isfinite(m.m1));
    // M2 is the transpose of M1 up to the O(h^2) commutator error
    CHECK(m.m1 == doctest::Approx(m.m2).epsilon(1e-3));
    ls.push_back(std::log(re));
    lm.push_back(std::log(m.m1));
  }
  CHECK((lm[2] - lm[0]) / (ls[2] - ls[0]) <= 1.0);
}
