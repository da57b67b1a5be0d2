#include "rl/schur.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "rl/errors.hpp"
#include "rl/hypgeo.hpp"

namespace rl {

namespace {

// Golub-Welsch nodes and weights on [-1, 1].
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(m);
  weights.resize(m);
  for (int k = 0; k < m; ++k) {
    nodes[k] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    weights[k] = 2.0 * v * v;
  }
}

struct Panel {
  double lo, hi;
};

// Integrates f over a list of panels with an m-point Gauss rule per panel.
template <class F>
double panel_quad(const std::vector<Panel>& panels, const std::vector<double>& gx, const std::vector<double>& gw,
                  F&& f) {
  double acc = 0.0;
  for (const Panel& p : panels) {
    const double c = 0.5 * (p.lo + p.hi), hw = 0.5 * (p.hi - p.lo);
    for (std::size_t k = 0; k < gx.size(); ++k) acc += hw * gw[k] * f(c + hw * gx[k]);
  }
  return acc;
}

bool borderline(double e, int n) { return std::abs(e - 0.5 * n) < 1e-9; }

}  // namespace

std::vector<Vec> icosphere(int level) {
  if (level < 0 || level > 3) fail(ErrorKind::Validation, "icosphere level must be in [0, 3]");
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                                    {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
  for (auto& u : v) u.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      mid[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> g;
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      g.push_back({t[0], a, c});
      g.push_back({t[1], b, a});
      g.push_back({t[2], c, b});
      g.push_back({a, b, c});
    }
    f = std::move(g);
  }
  std::vector<Vec> out;
  for (const auto& u : v) out.push_back(Vec(u));
  return out;
}

BallGrid make_ball_grid(int panels, int nodes_per_panel, int sphere_level, double panel_width) {
  if (panels < 1 || nodes_per_panel < 1 || !(panel_width > 0.0))
    fail(ErrorKind::Validation, "ball grid needs at least one panel and one node per panel");
  BallGrid G;
  G.dirs = icosphere(sphere_level);
  std::vector<double> gx, gw;
  gauss_legendre(nodes_per_panel, gx, gw);
  std::vector<double> tw;
  for (int k = 0; k < panels; ++k) {
    const double lo = k * panel_width, hw = 0.5 * panel_width;
    for (int q = 0; q < nodes_per_panel; ++q) {
      const double t = lo + hw * (1.0 + gx[q]);
      G.t_nodes.push_back(t);
      tw.push_back(hw * gw[q]);
    }
  }
  const double nd = static_cast<double>(G.dirs.size());
  for (std::size_t i = 0; i < G.t_nodes.size(); ++i) {
    const double t = G.t_nodes[i];
    const double sh = std::sinh(t);
    for (std::size_t j = 0; j < G.dirs.size(); ++j) {
      G.z.push_back(std::tanh(0.5 * t) * G.dirs[j]);
      G.w.push_back(tw[i] * sh * sh * 4.0 * kPi / nd);
      G.x.push_back(std::exp(-t));
      G.rad.push_back(static_cast<int>(i));
      G.dir.push_back(static_cast<int>(j));
    }
  }
  return G;
}

double log_weight(double x, double N) {
  if (N == 0.0) return 1.0;
  const double l = std::log(x);
  return std::pow(1.0 + l * l, -0.5 * N);
}

void KernelGrid::validate() const {
  const auto r = static_cast<std::size_t>(K.rows()), c = static_cast<std::size_t>(K.cols());
  if (wl.size() != r || xl.size() != r || wr.size() != c || xr.size() != c)
    fail(ErrorKind::Validation, "kernel grid: weight and node arrays do not match the matrix shape");
  for (std::size_t i = 0; i < r; ++i)
    if (!(wl[i] > 0.0) || !(xl[i] > 0.0) || !(xl[i] <= 1.0))
      fail(ErrorKind::Validation, "kernel grid: left weights must be positive and 0 < x <= 1");
  for (std::size_t j = 0; j < c; ++j)
    if (!(wr[j] > 0.0) || !(xr[j] > 0.0) || !(xr[j] <= 1.0))
      fail(ErrorKind::Validation, "kernel grid: right weights must be positive and 0 < x <= 1");
  if (!K.allFinite()) fail(ErrorKind::Validation, "kernel grid: non-finite entries");
}

CMatrix KernelGrid::l2_matrix() const {
  validate();
  CMatrix A = K;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double li = std::sqrt(wl[i]) * std::pow(xl[i], weight.a) * log_weight(xl[i], weight.logN_left);
    A.row(i) *= li;
  }
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    const double rj = std::sqrt(wr[j]) * std::pow(xr[j], weight.b) * log_weight(xr[j], weight.logN_right);
    A.col(j) *= rj;
  }
  return A;
}

double matrix_norm2(const CMatrix& A) {
  if (A.size() == 0) return 0.0;
  if (A.rows() < 4000 && A.cols() < 4000) {
    Eigen::BDCSVD<CMatrix> svd(A);
    return svd.singularValues()(0);
  }
  return power_norm2(A);
}

double power_norm2(const CMatrix& A, int max_iter, double tol) {
  if (A.size() == 0) return 0.0;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(A.cols());
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = cplx(nd(rng), nd(rng));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXcd u = A.adjoint() * (A * v);
    const double nrm = u.norm();
    if (nrm == 0.0) return 0.0;
    v = u / nrm;
    const double next = std::sqrt(nrm);
    if (std::abs(next - est) <= tol * next) return next;
    est = next;
  }
  return est;
}

double grid_norm(const KernelGrid& K) { return matrix_norm2(K.l2_matrix()); }

namespace {

// Model kernel evaluation in polar coordinates about the origin: z at
// distance t on the axis, z' at distance tp and angle phi from the axis.
double model_kernel(double alpha, double beta, double t, double tp, double phi) {
  // Written with hyperbolic functions so nothing cancels near the boundary.
  const double ch = std::cosh(0.5 * t), chp = std::cosh(0.5 * tp);
  const double r = std::tanh(0.5 * t), rp = std::tanh(0.5 * tp);
  const double s = 1.0 / (ch * ch), sp = 1.0 / (chp * chp);
  const double dr = std::sinh(0.5 * (t - tp)) / (ch * chp);
  const double sh = std::sin(0.5 * phi);
  const double d2 = dr * dr + 4.0 * r * rp * sh * sh;
  const double R = std::sqrt(s * s + sp * sp + d2);
  return std::pow(s / R, alpha) * std::pow(sp / R, beta);
}

// sup over z of (1/p(z)) int k(z, z') p(z') dg(z'), p = x^{n/2} <log x>^{-kappa},
// k = <log x>^{-NL} rho_L^alpha rho_R^beta <log x'>^{-NR}.
double row_sup(double alpha, double beta, int n, double NL, double NR, double kappa, double t_max) {
  std::vector<double> gx, gw;
  gauss_legendre(8, gx, gw);
  std::vector<Panel> radial;
  const double step = 1.0;
  for (double a = 0.0; a < t_max - 1e-12; a += step) radial.push_back({a, std::min(a + step, t_max)});
  const double sphere_n1 = 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);  // |S^{n-1}|
  double best = 0.0;
  const int nz = std::max(8, static_cast<int>(std::ceil(2.0 * t_max)));
  for (int iz = 0; iz <= nz; ++iz) {
    const double t = t_max * iz / nz;
    // Angular panels graded towards phi = 0 at the scale e^{-t}.
    std::vector<Panel> ang;
    double hi = kPi;
    const double floor_phi = std::min(1e-3, 1e-2 * std::exp(-t));
    while (hi > floor_phi) {
      ang.push_back({0.5 * hi, hi});
      hi *= 0.5;
    }
    ang.push_back({0.0, hi});
    const double val = panel_quad(radial, gx, gw, [&](double tp) {
      const double dens = std::pow(std::sinh(tp), n) * std::exp(-0.5 * n * tp) * std::pow(1.0 + tp * tp, -0.5 * (NR + kappa));
      const double angular = panel_quad(ang, gx, gw, [&](double phi) {
        return model_kernel(alpha, beta, t, tp, phi) * sphere_n1 * std::pow(std::sin(phi), n - 1);
      });
      return dens * angular;
    });
    const double pz = std::exp(-0.5 * n * t) * std::pow(1.0 + t * t, -0.5 * kappa);
    best = std::max(best, val * std::pow(1.0 + t * t, -0.5 * NL) / pz);
  }
  return best;
}

}  // namespace

double schur_row_sup(double alpha, double beta, int n, double logN_left, double logN_right, double t_max) {
  if (n < 1 || !(t_max > 0.0)) fail(ErrorKind::Validation, "schur_row_sup: need n >= 1 and t_max > 0");
  return row_sup(alpha, beta, n, logN_left, logN_right, 0.0, t_max);
}

std::optional<double> schur_bound(double alpha, double beta, double C, int n, std::optional<double> logN,
                                  double t_max) {
  if (n < 1) fail(ErrorKind::Validation, "schur_bound: n must be positive");
  if (!(C >= 0.0)) fail(ErrorKind::Validation, "schur_bound: C must be nonnegative");
  const double half = 0.5 * n;
  if (alpha < half - 1e-9 || beta < half - 1e-9)
    fail(ErrorKind::Validation, "schur_bound: exponents must satisfy alpha, beta >= n/2");
  const bool bl = borderline(alpha, n), br = borderline(beta, n);
  if (bl || br) {
    if (!logN || !(*logN > 0.5)) return std::nullopt;
  }
  const double NL = bl ? *logN : 0.0, NR = br ? *logN : 0.0;
  // Test function x^{n/2} <log x>^{-kappa} with kappa = N/2 balances the
  // log weights between the row and column integrals.
  const double kappa = (bl || br) ? 0.5 * (*logN) : 0.0;
  const double c1 = row_sup(alpha, beta, n, NL, NR, kappa, t_max);
  const double c2 = row_sup(beta, alpha, n, NR, NL, kappa, t_max);
  return C * std::sqrt(c1 * c2);
}

AmplitudeTable compute_amplitudes(const MetricSpec& spec, const BallGrid& grid, const StencilOptions& opt) {
  AmplitudeTable T;
  T.N = grid.size();
  T.amps.assign(static_cast<std::size_t>(T.N) * T.N, PairAmplitudes{});
  const bool iso = (!spec.H || spec.H->isotropic()) && (!spec.W || spec.W->isotropic());
  std::map<std::tuple<int, int, long long>, PairAmplitudes> cache;
  for (int i = 0; i < T.N; ++i) {
    for (int j = 0; j < T.N; ++j) {
      if (i == j) continue;
      PairAmplitudes a;
      if (iso) {
        const double c = grid.dirs[grid.dir[i]].dot(grid.dirs[grid.dir[j]]);
        const auto key = std::make_tuple(grid.rad[i], grid.rad[j], std::llround(c * 1e9));
        auto it = cache.find(key);
        if (it == cache.end()) {
          a = pair_amplitudes(spec, BallPoint(grid.z[i]), BallPoint(grid.z[j]), opt);
          cache.emplace(key, a);
          ++T.distinct_pairs;
        } else {
          a = it->second;
        }
      } else {
        a = pair_amplitudes(spec, BallPoint(grid.z[i]), BallPoint(grid.z[j]), opt);
        ++T.distinct_pairs;
      }
      T.amps[static_cast<std::size_t>(i) * T.N + j] = a;
    }
  }
  return T;
}

namespace {

// Geodesic radius of a ball of hyperbolic volume V in H^3.
double ball_radius(double V) {
  double lo = 0.0, hi = 1.0;
  auto vol = [](double r) { return kPi * (std::sinh(2.0 * r) - 2.0 * r); };
  while (vol(hi) < V) hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (vol(mid) < V ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Average of h^{-2} e^{-i lambda r} / (4 pi sinh r) over a geodesic ball of volume V.
cplx diagonal_average(double V, const SpectralPoint& sp) {
  const double rho = ball_radius(V);
  const cplx lam = sp.lambda_full();
  const cplx I(0.0, 1.0);
  const cplx a = 1.0 - I * lam, b = 1.0 + I * lam;
  const cplx integral = (std::exp(a * rho) - 1.0) / (2.0 * a) + (std::exp(-b * rho) - 1.0) / (2.0 * b);
  return integral / (V * sp.h * sp.h);
}

KernelGrid empty_grid(const BallGrid& grid, const WeightSpec& w) {
  KernelGrid K;
  K.wl = K.wr = grid.w;
  K.xl = K.xr = grid.x;
  K.weight = w;
  K.K = CMatrix::Zero(grid.size(), grid.size());
  return K;
}

}  // namespace

KernelGrid parametrix_grid(const AmplitudeTable& T, const BallGrid& grid, const SpectralPoint& sp,
                           const WeightSpec& w) {
  sp.validate();
  if (T.N != grid.size()) fail(ErrorKind::Validation, "amplitude table does not match the grid");
  KernelGrid K = empty_grid(grid, w);
  for (int i = 0; i < T.N; ++i)
    for (int j = 0; j < T.N; ++j)
      K.K(i, j) = i == j ? diagonal_average(grid.w[i], sp) : parametrix_from(T.at(i, j), sp);
  return K;
}

KernelGrid error_grid(const AmplitudeTable& T, const BallGrid& grid, const SpectralPoint& sp, const WeightSpec& w) {
  sp.validate();
  if (T.N != grid.size()) fail(ErrorKind::Validation, "amplitude table does not match the grid");
  KernelGrid K = empty_grid(grid, w);
  for (int i = 0; i < T.N; ++i)
    for (int j = 0; j < T.N; ++j)
      if (i != j) K.K(i, j) = error_from(T.at(i, j), sp);
  return K;
}

double weighted_error_norm(const AmplitudeTable& T, const BallGrid& grid, const SpectralPoint& sp, double b,
                           double logN) {
  const double m = sp.sigma.imag() / sp.h;
  const bool at_edge = std::abs(b - m) < 1e-9;
  if (at_edge) {
    if (!(logN > 0.5)) fail(ErrorKind::Validation, "weight at Im(sigma)/h requires a log weight N > 1/2");
  } else if (!(b > m && b < 2.0 - m)) {
    fail(ErrorKind::Validation, "weight b outside the admissible window (Im(sigma)/h, 2 - Im(sigma)/h)");
  }
  WeightSpec w;
  w.a = -b;
  w.b = b;
  w.logN_right = at_edge ? logN : 0.0;
  return grid_norm(error_grid(T, grid, sp, w));
}

AssembledResolvent resolvent_assemble(const KernelGrid& G, const KernelGrid& E, double a, double b) {
  G.validate();
  E.validate();
  if (G.K.rows() != E.K.rows() || G.K.cols() != E.K.cols() || G.K.rows() != G.K.cols())
    fail(ErrorKind::Validation, "resolvent_assemble: G and E must be square grids on the same nodes");
  KernelGrid Gw = G, Ew = E;
  Gw.weight = {a, b, G.weight.logN_left, G.weight.logN_right};
  Ew.weight = {-b, b, 0.0, 0.0};
  const CMatrix Ghat = Gw.l2_matrix();
  const CMatrix Ehat = Ew.l2_matrix();
  AssembledResolvent out;
  out.e_norm = matrix_norm2(Ehat);
  out.g_norm = matrix_norm2(Ghat);
  if (!(out.e_norm < 1.0)) fail(ErrorKind::ModelValidity, "weighted error has norm >= 1; Neumann series diverges");
  const Eigen::Index N = Ghat.rows();
  const CMatrix IE = CMatrix::Identity(N, N) + Ehat;
  // X (I + E) = G, solved as (I + E)^* X^* = G^*.
  const CMatrix X = IE.adjoint().partialPivLu().solve(Ghat.adjoint()).adjoint();
  out.residual = out.g_norm > 0.0 ? matrix_norm2(X * IE - Ghat) / out.g_norm : 0.0;
  out.norm = matrix_norm2(X);
  out.R = Gw;
  out.R.weight = WeightSpec{};
  out.R.K = X;
  for (Eigen::Index i = 0; i < N; ++i) out.R.K.row(i) /= std::sqrt(Gw.wl[i]);
  for (Eigen::Index j = 0; j < N; ++j) out.R.K.col(j) /= std::sqrt(Gw.wr[j]);
  return out;
}

}  // namespace rl
