#include "rl/glue.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <memory>

#include "rl/errors.hpp"
#include "rl/radialsolve.hpp"

namespace rl {

namespace {

using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using SpC = Eigen::SparseMatrix<cplx>;
using SpR = Eigen::SparseMatrix<double>;

// Quintic smoothstep rising from 0 at d = a to 1 at d = b, with d-derivatives.
CutoffJet ramp(double d, double a, double b) {
  if (d <= a) return {0.0, 0.0, 0.0};
  if (d >= b) return {1.0, 0.0, 0.0};
  const double w = b - a, u = (d - a) / w;
  const double u2 = u * u;
  return {u2 * u * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (1.0 - u) * (1.0 - u) / w,
          60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (w * w)};
}

// Jet in r of a ramp in r_I - r.
CutoffJet mirrored(CutoffJet j) { return {j.v, -j.d1, j.d2}; }

CutoffJet one_minus(CutoffJet j) { return {1.0 - j.v, -j.d1, -j.d2}; }

CutoffJet product(CutoffJet a, CutoffJet b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

CutoffJet cutoff_jet(Cutoff which, double delta, double dH, double dI) {
  const double d = delta;
  switch (which) {
    case Cutoff::Chi1: return ramp(dH, 3 * d, 4 * d);
    case Cutoff::Chi1_1: return ramp(dH, d, 2 * d);
    case Cutoff::ChiT1: return ramp(dH, 5 * d, 6 * d);
    case Cutoff::Chi2: return mirrored(ramp(dI, 3 * d, 4 * d));
    case Cutoff::Chi2_1: return mirrored(ramp(dI, d, 2 * d));
    case Cutoff::ChiT2: return mirrored(ramp(dI, 5 * d, 6 * d));
    case Cutoff::Chi3: {
      const CutoffJet h = product(one_minus(ramp(dH, 3 * d, 4 * d)), one_minus(ramp(dH, d, 2 * d)));
      const CutoffJet i = product(one_minus(mirrored(ramp(dI, 3 * d, 4 * d))),
                                  one_minus(mirrored(ramp(dI, d, 2 * d))));
      return {1.0 - h.v - i.v, -h.d1 - i.d1, -h.d2 - i.d2};
    }
    case Cutoff::Chi: return product(ramp(dH, d / 4, d / 2), mirrored(ramp(dI, d / 4, d / 2)));
  }
  return {};
}

double default_delta(const DSSModel& M, double delta) {
  return delta > 0.0 ? delta : (M.r_I - M.r_H) / 12.0;
}

// Everything the identities need, on one uniform tortoise grid with
// Dirichlet ends. Model ends live on contiguous index ranges of that grid
// and are transplanted by restriction and extension by zero.
struct GlueSystem {
  int N = 0;
  double h = 0.0;
  cplx sigma;
  std::vector<TortoisePoint> pts;
  RVec V, VH, VI, rhoH, rhoI;
  // s-jets (value, first and second s-derivatives) of the cutoffs
  std::array<RVec, kCutoffCount> c, c1, c2;
  int h_end = 0;    // H model: indices [0, h_end)
  int i_begin = 0;  // I model: indices [i_begin, N)
  SpC P, PH, PI;
  SpR C1, C2;  // product-rule commutators [-d^2, 1 - chi_j]
  std::unique_ptr<Eigen::SparseLU<SpC>> luP, luH, luI;

  const RVec& cut(Cutoff w) const { return c[static_cast<int>(w)]; }
  RVec one_minus(Cutoff w) const { return RVec::Ones(N) - cut(w); }

  CVec solve(const Eigen::SparseLU<SpC>& lu, const CVec& g, bool adjoint) const {
    // The operators are complex symmetric, so the adjoint solve is conj R conj.
    if (!adjoint) return lu.solve(g);
    return lu.solve(g.conjugate()).conjugate();
  }
  CVec R(const CVec& g, bool adj = false) const { return solve(*luP, g, adj); }
  CVec RH(const CVec& g, bool adj = false) const {
    CVec out = CVec::Zero(N);
    out.head(h_end) = solve(*luH, g.head(h_end), adj);
    return out;
  }
  CVec RI(const CVec& g, bool adj = false) const {
    CVec out = CVec::Zero(N);
    out.tail(N - i_begin) = solve(*luI, g.tail(N - i_begin), adj);
    return out;
  }
};

SpC tridiagonal(const RVec& pot, int lo, int hi, double h, cplx sigma) {
  const int n = hi - lo;
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(3 * n);
  const double off = -1.0 / (h * h);
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0 / (h * h) + pot[lo + i] - sigma * sigma);
    if (i > 0) t.emplace_back(i, i - 1, off);
    if (i + 1 < n) t.emplace_back(i, i + 1, off);
  }
  SpC A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// [-d^2, m] f = -m'' f - 2 m' f' with central differences.
SpR commutator(const RVec& m1, const RVec& m2, double h) {
  const int n = static_cast<int>(m1.size());
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    if (m1[i] == 0.0 && m2[i] == 0.0) continue;
    t.emplace_back(i, i, -m2[i]);
    if (i > 0) t.emplace_back(i, i - 1, m1[i] / h);
    if (i + 1 < n) t.emplace_back(i, i + 1, -m1[i] / h);
  }
  SpR C(n, n);
  C.setFromTriplets(t.begin(), t.end());
  return C;
}

std::unique_ptr<Eigen::SparseLU<SpC>> factor(const SpC& A) {
  auto lu = std::make_unique<Eigen::SparseLU<SpC>>();
  lu->compute(A);
  if (lu->info() != Eigen::Success) fail(ErrorKind::NearResonance, "glue: discrete mode operator is singular");
  return lu;
}

// Dense inverse of a banded operator through its sparse factorization.
CMatrix dense_inverse(const SpC& A) {
  const auto lu = factor(A);
  return lu->solve(CMatrix::Identity(A.rows(), A.cols()));
}

double hyperbolic_potential(const DSSModel& M, int ell, double beta, double rho) {
  const double lam = ell * (ell + M.n - 1.0);
  const double sh = std::sinh(beta * rho);
  return beta * beta * (M.n * (M.n - 2) / 4.0 + lam) / (sh * sh);
}

GlueSystem build(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt, bool factorize) {
  if (ell < 0) fail(ErrorKind::Validation, "glue: ell must be nonnegative");
  if (!(opt.h > 0.0) || !(opt.L > 0.0)) fail(ErrorKind::Validation, "glue: need h > 0 and L > 0");
  const double delta = default_delta(M, opt.delta);
  if (!(8.0 * delta < M.r_I - M.r_H)) fail(ErrorKind::Validation, "glue: need 8 delta < r_I - r_H");

  GlueSystem S;
  S.h = opt.h;
  S.sigma = sigma;
  S.N = static_cast<int>(std::lround(2.0 * opt.L / opt.h)) - 1;
  const int N = S.N;
  if (N < 16) fail(ErrorKind::Validation, "glue: grid too coarse");
  S.pts.resize(N);
  S.V.resize(N);
  for (auto& v : S.c) v.resize(N);
  for (auto& v : S.c1) v.resize(N);
  for (auto& v : S.c2) v.resize(N);
  for (int i = 0; i < N; ++i) {
    const double s = -opt.L + (i + 1) * opt.h;
    const TortoisePoint p = r_of_tortoise(M, s);
    S.pts[i] = p;
    S.V[i] = mode_potential(M, ell, p);
    // dr/ds = alpha^2 and d^2 r/ds^2 = 2 beta alpha^2
    const double a2 = p.alpha2;
    for (int k = 0; k < kCutoffCount; ++k) {
      const CutoffJet j = cutoff_jet(static_cast<Cutoff>(k), delta, p.dH, p.dI);
      S.c[k][i] = j.v;
      S.c1[k][i] = j.d1 * a2;
      S.c2[k][i] = j.d2 * a2 * a2 + j.d1 * 2.0 * p.beta * a2;
    }
  }

  // Ball centres of the two end models sit at grid nodes beyond the
  // flattening windows, so rho vanishes exactly on a Dirichlet node.
  const double sH = tortoise_of_r(M, M.r_H + 7.0 * delta);
  const double sI = tortoise_of_r(M, M.r_I - 7.0 * delta);
  S.h_end = std::clamp(static_cast<int>(std::ceil((sH + opt.L) / opt.h)) - 1, 2, N - 2);
  S.i_begin = std::clamp(static_cast<int>(std::floor((sI + opt.L) / opt.h)), 2, N - 2);
  const double s_centre_H = -opt.L + (S.h_end + 1) * opt.h;
  const double s_centre_I = -opt.L + S.i_begin * opt.h;

  S.VH = S.V;
  S.VI = S.V;
  S.rhoH = RVec::Zero(N);
  S.rhoI = RVec::Zero(N);
  const RVec& tH = S.cut(Cutoff::ChiT1);
  const RVec& tI = S.cut(Cutoff::ChiT2);
  const double bH = M.beta_H, bI = std::abs(M.beta_I);
  for (int i = 0; i < N; ++i) {
    const double s = -opt.L + (i + 1) * opt.h;
    if (i < S.h_end) {
      S.rhoH[i] = s_centre_H - s;
      const double vh = tH[i] > 0.0 ? hyperbolic_potential(M, ell, bH, S.rhoH[i]) : 0.0;
      S.VH[i] = (1.0 - tH[i]) * S.V[i] + tH[i] * vh;
    }
    if (i >= S.i_begin) {
      S.rhoI[i] = s - s_centre_I;
      const double vi = tI[i] > 0.0 ? hyperbolic_potential(M, ell, bI, S.rhoI[i]) : 0.0;
      S.VI[i] = (1.0 - tI[i]) * S.V[i] + tI[i] * vi;
    }
  }

  S.P = tridiagonal(S.V, 0, N, opt.h, sigma);
  S.PH = tridiagonal(S.VH, 0, S.h_end, opt.h, sigma);
  S.PI = tridiagonal(S.VI, S.i_begin, N, opt.h, sigma);
  // m = 1 - chi_j: m' = -chi_j', m'' = -chi_j''
  S.C1 = commutator(-S.c1[static_cast<int>(Cutoff::Chi1)], -S.c2[static_cast<int>(Cutoff::Chi1)], opt.h);
  S.C2 = commutator(-S.c1[static_cast<int>(Cutoff::Chi2)], -S.c2[static_cast<int>(Cutoff::Chi2)], opt.h);
  if (factorize) {
    S.luP = factor(S.P);
    S.luH = factor(S.PH);
    S.luI = factor(S.PI);
  }
  return S;
}

CVec mul(const RVec& m, const CVec& v) { return m.cwiseProduct(v); }

// 2-norm of an operator given by its action and the action of its adjoint.
template <class Op, class Adj>
double operator_norm(int n, Op&& A, Adj&& Aa, int max_iter, double tol) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(1.0 + 0.5 * std::sin(0.37 * i), 0.25 * std::cos(0.11 * i));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CVec w = Aa(A(v));
    const double lam = w.norm();
    if (!(lam > 0.0)) return 0.0;
    v = w / lam;
    const double next = std::sqrt(lam);
    if (std::abs(next - est) <= tol * next) return next;
    est = next;
  }
  return est;
}

// The pieces of the three identities and their adjoints.
struct Pieces {
  const GlueSystem& S;
  RVec chi3, chi, m1, m11, mt1, m2, m21, mt2;
  SpR C1t, C2t;

  explicit Pieces(const GlueSystem& sys) : S(sys) {
    chi3 = S.cut(Cutoff::Chi3);
    chi = S.cut(Cutoff::Chi);
    m1 = S.one_minus(Cutoff::Chi1);
    m11 = S.one_minus(Cutoff::Chi1_1);
    mt1 = S.one_minus(Cutoff::ChiT1);
    m2 = S.one_minus(Cutoff::Chi2);
    m21 = S.one_minus(Cutoff::Chi2_1);
    mt2 = S.one_minus(Cutoff::ChiT2);
    C1t = S.C1.transpose();
    C2t = S.C2.transpose();
  }

  CVec A1(const CVec& f, bool adj) const {
    if (!adj) return mul(m1, S.RH(mul(m11, f))) + mul(m2, S.RI(mul(m21, f)));
    return mul(m11, S.RH(mul(m1, f), true)) + mul(m21, S.RI(mul(m2, f), true));
  }
  CVec A2(const CVec& f, bool adj) const {
    if (!adj) return mul(m11, S.RH(mul(m1, f))) + mul(m21, S.RI(mul(m2, f)));
    return mul(m1, S.RH(mul(m11, f), true)) + mul(m2, S.RI(mul(m21, f), true));
  }
  CVec M1(const CVec& f, bool adj) const {
    if (!adj) return mul(chi3, f) + mul(m11, S.RH(mul(mt1, S.C1 * f))) + mul(m21, S.RI(mul(mt2, S.C2 * f)));
    return mul(chi3, f) + C1t * mul(mt1, S.RH(mul(m11, f), true)) + C2t * mul(mt2, S.RI(mul(m21, f), true));
  }
  CVec M2(const CVec& f, bool adj) const {
    if (!adj) return mul(chi3, f) - S.C1 * mul(mt1, S.RH(mul(m11, f))) - S.C2 * mul(mt2, S.RI(mul(m21, f)));
    return mul(chi3, f) - mul(m11, S.RH(mul(mt1, C1t * f), true)) - mul(m21, S.RI(mul(mt2, C2t * f), true));
  }

  // Right-hand sides of the identities (or their adjoints) applied to f.
  CVec rhs1(const CVec& f, bool adj) const {
    if (!adj)
      return S.R(mul(chi3, f)) + A1(f, false) - S.R(S.C1 * S.RH(mul(m11, f))) - S.R(S.C2 * S.RI(mul(m21, f)));
    const CVec Rf = S.R(f, true);
    return mul(chi3, Rf) + A1(f, true) - mul(m11, S.RH(C1t * Rf, true)) - mul(m21, S.RI(C2t * Rf, true));
  }
  CVec rhs2(const CVec& f, bool adj) const {
    if (!adj) {
      const CVec Rf = S.R(f);
      return mul(chi3, Rf) + A2(f, false) + mul(m11, S.RH(S.C1 * Rf)) + mul(m21, S.RI(S.C2 * Rf));
    }
    return S.R(mul(chi3, f), true) + A2(f, true) + S.R(C1t * S.RH(mul(m11, f), true), true) +
           S.R(C2t * S.RI(mul(m21, f), true), true);
  }
  CVec rhs_decomposition(const CVec& f, bool adj, bool corrected) const {
    if (!adj) {
      const CVec m2f = M2(f, false);
      CVec out = M1(mul(chi, S.R(mul(chi, m2f))), false) + A1(f, false);
      if (corrected) out += A2(m2f, false);
      return out;
    }
    CVec out = M2(mul(chi, S.R(mul(chi, M1(f, true)), true)), true) + A1(f, true);
    if (corrected) out += M2(A2(f, true), true);
    return out;
  }
};

}  // namespace

CutoffJet CutoffFamily::eval(Cutoff which, double rr) const {
  return cutoff_jet(which, delta, rr - model.r_H, model.r_I - rr);
}

CutoffFamily cutoffs(const DSSModel& M, double delta, int samples) {
  if (!(delta > 0.0) || !(8.0 * delta < M.r_I - M.r_H))
    fail(ErrorKind::Validation, "cutoffs: need 0 < 8 delta < r_I - r_H");
  if (samples < 2) fail(ErrorKind::Validation, "cutoffs: need at least two samples");
  CutoffFamily F;
  F.model = M;
  F.delta = delta;
  F.r.resize(samples);
  F.values.resize(samples);
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    const double dH = t * (M.r_I - M.r_H), dI = (1.0 - t) * (M.r_I - M.r_H);
    F.r[i] = M.r_H + dH;
    for (int k = 0; k < kCutoffCount; ++k) F.values[i][k] = cutoff_jet(static_cast<Cutoff>(k), delta, dH, dI).v;
  }
  return F;
}

GlueResiduals gluing_residual(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt) {
  const GlueSystem S = build(M, ell, sigma, opt, true);
  const Pieces P(S);
  const int n = S.N;
  constexpr int kIter = 200;
  constexpr double kTol = 1e-2;
  const double normR = operator_norm(
      n, [&](const CVec& f) { return S.R(f); }, [&](const CVec& f) { return S.R(f, true); }, kIter, kTol);
  auto residual = [&](auto&& rhs) {
    return operator_norm(
               n, [&](const CVec& f) -> CVec { return S.R(f) - rhs(f, false); },
               [&](const CVec& f) -> CVec { return S.R(f, true) - rhs(f, true); }, kIter, kTol) /
           normR;
  };
  GlueResiduals out;
  out.grid_size = n;
  out.h = S.h;
  out.residentity1 = residual([&](const CVec& f, bool adj) { return P.rhs1(f, adj); });
  out.residentity2 = residual([&](const CVec& f, bool adj) { return P.rhs2(f, adj); });
  out.brpkid = residual([&](const CVec& f, bool adj) { return P.rhs_decomposition(f, adj, true); });
  out.brpkid_literal = residual([&](const CVec& f, bool adj) { return P.rhs_decomposition(f, adj, false); });
  return out;
}

EndResolvents model_end_resolvents(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt) {
  const GlueSystem S = build(M, ell, sigma, opt, false);
  auto dense = [&](const SpC& A, int lo) {
    const int n = static_cast<int>(A.rows());
    KernelGrid K;
    K.wl.assign(n, S.h);
    K.wr.assign(n, S.h);
    K.xl.resize(n);
    for (int i = 0; i < n; ++i) K.xl[i] = std::exp(log_tilde_alpha(M, S.pts[lo + i]));
    K.xr = K.xl;
    K.K = dense_inverse(A) / S.h;
    return K;
  };
  return {dense(S.PH, 0), dense(S.PI, S.i_begin)};
}

double end_scaling_residual(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt) {
  const GlueSystem S = build(M, ell, sigma, opt, false);
  const double b = M.beta_H;
  const RVec& t = S.cut(Cutoff::ChiT1);
  // Unit-curvature model on the rescaled grid t = beta rho, spacing beta h.
  RVec V1(S.h_end);
  for (int i = 0; i < S.h_end; ++i) {
    const double vh = t[i] > 0.0 ? hyperbolic_potential(M, ell, 1.0, b * S.rhoH[i]) : 0.0;
    V1[i] = (1.0 - t[i]) * S.V[i] / (b * b) + t[i] * vh;
  }
  const SpC A1 = tridiagonal(V1, 0, S.h_end, b * S.h, sigma / b);
  const CMatrix RH = dense_inverse(S.PH);
  const CMatrix R1 = dense_inverse(A1) / (b * b);
  return (RH - R1).cwiseAbs().maxCoeff() / RH.cwiseAbs().maxCoeff();
}

double end_locality_residual(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt) {
  const GlueSystem S = build(M, ell, sigma, opt, false);
  const RVec m1 = S.one_minus(Cutoff::Chi1), m2 = S.one_minus(Cutoff::Chi2);
  double worst = 0.0;
  for (int k = 1; k <= 3; ++k) {
    CVec f(S.N);
    for (int i = 0; i < S.N; ++i) f[i] = cplx(std::sin(0.013 * k * i), std::cos(0.007 * k * i));
    const CVec fH = mul(m1, f), fI = mul(m2, f);
    const CVec PfH = S.P * fH, PfI = S.P * fI;
    const CVec HfH = S.PH * fH.head(S.h_end);
    const CVec IfI = S.PI * fI.tail(S.N - S.i_begin);
    const double eH = ((PfH.head(S.h_end) - HfH).norm() + PfH.tail(S.N - S.h_end).norm()) / PfH.norm();
    const double eI = ((PfI.tail(S.N - S.i_begin) - IfI).norm() + PfI.head(S.i_begin).norm()) / PfI.norm();
    worst = std::max({worst, eH, eI});
  }
  return worst;
}

MNorms m_norms(const DSSModel& M, int ell, cplx sigma, const GlueOptions& opt) {
  const GlueSystem S = build(M, ell, sigma, opt, true);
  const Pieces P(S);
  const double m1 = operator_norm(
      S.N, [&](const CVec& f) { return P.M1(f, false); }, [&](const CVec& f) { return P.M1(f, true); }, 500, 1e-10);
  const double m2 = operator_norm(
      S.N, [&](const CVec& f) { return P.M2(f, false); }, [&](const CVec& f) { return P.M2(f, true); }, 500, 1e-10);
  return {sigma, m1, m2};
}

}  // namespace rl
