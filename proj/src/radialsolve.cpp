#include "rl/radialsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rl/errors.hpp"
#include "rl/ode.hpp"

namespace rl {

namespace {

const cplx I(0.0, 1.0);

OdeOptions mode_ode_options() {
  OdeOptions o;
  o.rel_tol = 1e-11;
  o.abs_tol = 1e-14;
  o.dt0 = 1e-2;
  return o;
}

// Jost data at the far end: w ~ e^{+-i sigma s} (1 + V / (kappa (kappa + 2 i sigma))).
void jost_start(const TortoiseGrid& G, cplx sigma, End end, cplx& w, cplx& dw) {
  if (end == End::H) {
    const double s = -G.L, k = G.kappa_minus, v = G.V_at(s);
    const cplx c = v / (k * (k + 2.0 * I * sigma));
    const cplx e = std::exp(I * sigma * s);
    w = e * (1.0 + c);
    dw = e * (I * sigma * (1.0 + c) + k * c);
  } else {
    const double s = G.L, k = G.kappa_plus, v = G.V_at(s);
    const cplx c = v / (k * (k + 2.0 * I * sigma));
    const cplx e = std::exp(-I * sigma * s);
    w = e * (1.0 + c);
    dw = e * (-I * sigma * (1.0 + c) - k * c);
  }
}

}  // namespace

double mode_potential(const DSSModel& M, int ell, const TortoisePoint& p) {
  const double h = 0.5 * M.n, a2 = p.alpha2, r = p.r;
  const double lam = static_cast<double>(ell) * (ell + M.n - 1);
  return h * a2 * ((h - 1.0) * a2 / (r * r) + 2.0 * p.beta / r) + a2 * lam / (r * r);
}

TortoiseGrid tortoise(const DSSModel& M, int ell, double L, int samples) {
  if (ell < 0) fail(ErrorKind::Validation, "ell must be nonnegative");
  if (samples < 2) fail(ErrorKind::Validation, "tortoise grid needs at least two samples");
  TortoiseGrid G;
  G.model = M;
  G.ell = ell;
  G.kappa_minus = 2.0 * M.beta_H;
  G.kappa_plus = 2.0 * std::abs(M.beta_I);
  G.L = L > 0.0 ? L : std::log(1e12) / std::min(G.kappa_minus, G.kappa_plus);
  G.potential = [M, ell](double rs) { return mode_potential(M, ell, r_of_tortoise(M, rs)); };
  for (int k = 0; k < samples; ++k) {
    const double rs = -G.L + 2.0 * G.L * k / (samples - 1);
    const TortoisePoint p = r_of_tortoise(M, rs);
    G.r_star.push_back(rs);
    G.r.push_back(p.r);
    G.V.push_back(mode_potential(M, ell, p));
  }
  G.tail = std::max(std::abs(G.V.front()), std::abs(G.V.back()));
  if (!(G.tail < 1e-10))
    fail(ErrorKind::Accuracy, "tortoise truncation too short: |V(+-L)| = " + std::to_string(G.tail));
  return G;
}

TortoiseGrid synthetic_grid(std::function<double(double)> V, double L, double kappa_minus, double kappa_plus) {
  if (!(L > 0.0)) fail(ErrorKind::Validation, "synthetic grid needs L > 0");
  TortoiseGrid G;
  G.L = L;
  G.kappa_minus = kappa_minus;
  G.kappa_plus = kappa_plus;
  G.potential = std::move(V);
  G.r_star = {-L, L};
  G.r = {0.0, 0.0};
  G.V = {G.V_at(-L), G.V_at(L)};
  G.tail = std::max(std::abs(G.V[0]), std::abs(G.V[1]));
  return G;
}

ModeSolution outgoing_solution(const TortoiseGrid& G, cplx sigma, End end, const std::vector<double>& nodes) {
  if (!std::is_sorted(nodes.begin(), nodes.end()))
    fail(ErrorKind::Validation, "outgoing_solution needs increasing nodes");
  if (!nodes.empty() && (nodes.front() < -G.L || nodes.back() > G.L))
    fail(ErrorKind::Validation, "nodes must lie inside [-L, L]");
  cplx w, dw;
  jost_start(G, sigma, end, w, dw);
  // Integrate a unit-size copy so the error control stays relative, and
  // restore the exponential size |e^{+-i sigma L}| on output.
  const double scale = std::abs(w);
  if (!(scale > 0.0) || !std::isfinite(scale))
    fail(ErrorKind::Accuracy, "outgoing solution start underflows or overflows; reduce |Im sigma| L");
  w /= scale;
  dw /= scale;
  const double dir = end == End::H ? 1.0 : -1.0;  // integrate in tau = dir * s
  const cplx s2 = sigma * sigma;
  OdeRhs rhs = [&G, s2, dir](const State& x, State& dx, double tau) {
    const double s = dir * tau;
    const cplx q = G.V_at(s) - s2;
    const cplx u(x[0], x[1]), du(x[2], x[3]);
    const cplx ddu = q * u;
    // d/dtau = dir d/ds.
    dx[0] = dir * du.real();
    dx[1] = dir * du.imag();
    dx[2] = dir * ddu.real();
    dx[3] = dir * ddu.imag();
  };
  DenseStepper st(rhs, {w.real(), w.imag(), dw.real(), dw.imag()}, dir * (end == End::H ? -G.L : G.L),
                  mode_ode_options());
  ModeSolution out;
  out.s = nodes;
  out.w.resize(nodes.size());
  out.dw.resize(nodes.size());
  const std::size_t N = nodes.size();
  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t idx = end == End::H ? k : N - 1 - k;
    const State x = st.advance_to(dir * nodes[idx]);
    out.w[idx] = scale * cplx(x[0], x[1]);
    out.dw[idx] = scale * cplx(x[2], x[3]);
    if (!std::isfinite(std::abs(out.w[idx])) || std::abs(out.w[idx]) > 1e250)
      fail(ErrorKind::Accuracy, "outgoing solution overflow; reduce |Im sigma| L");
  }
  return out;
}

WronskianResult wronskian(const TortoiseGrid& G, cplx sigma) {
  const std::vector<double> nodes = {-5.0, 0.0, 5.0};
  const ModeSolution h = outgoing_solution(G, sigma, End::H, nodes);
  const ModeSolution i = outgoing_solution(G, sigma, End::I, nodes);
  cplx W[3];
  for (int k = 0; k < 3; ++k) W[k] = h.w[k] * i.dw[k] - h.dw[k] * i.w[k];
  const double scale = std::abs(h.w[1] * i.dw[1]) + std::abs(h.dw[1] * i.w[1]);
  WronskianResult res;
  res.W = W[1];
  res.drift = std::max(std::abs(W[0] - W[1]), std::abs(W[2] - W[1])) / scale;
  if (res.drift > 1e-6) fail(ErrorKind::Accuracy, "Wronskian drift " + std::to_string(res.drift) + " exceeds 1e-6");
  return res;
}

namespace {

struct Scanner {
  const TortoiseGrid& G;
  double tol;
  int evals = 0;

  cplx W(cplx s) {
    ++evals;
    return wronskian(G, s).W;
  }

  // Change in arg W along the segment a -> b, bisecting until each piece
  // turns by less than pi/4. Throws NearResonance when a zero sits on it.
  double arg_change(cplx a, cplx b, cplx Wa, cplx Wb, int depth) {
    const double d = std::arg(Wb / Wa);
    if (std::abs(d) < kPi / 4.0) return d;
    if (depth > 40 || std::abs(b - a) < 10.0 * tol)
      fail(ErrorKind::NearResonance, "contour passes through a zero of the Wronskian");
    const cplx m = 0.5 * (a + b);
    const cplx Wm = W(m);
    return arg_change(a, m, Wa, Wm, depth + 1) + arg_change(m, b, Wm, Wb, depth + 1);
  }

  int winding(double x0, double x1, double y0, double y1) {
    const cplx c[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    double total = 0.0;
    for (int e = 0; e < 4; ++e) {
      const cplx a = c[e], b = c[(e + 1) % 4];
      const int pieces = std::max(4, static_cast<int>(std::ceil(std::abs(b - a) / 0.02)));
      cplx prev = a, Wprev = W(a);
      for (int k = 1; k <= pieces; ++k) {
        const cplx p = a + (b - a) * (static_cast<double>(k) / pieces);
        const cplx Wp = W(p);
        total += arg_change(prev, p, Wprev, Wp, 0);
        prev = p;
        Wprev = Wp;
      }
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
  }

  std::optional<cplx> newton(cplx s, double x0, double x1, double y0, double y1) {
    for (int it = 0; it < 60; ++it) {
      const double h = 1e-6;
      const cplx f = W(s);
      const cplx df = (W(s + h) - W(s - h)) / (2.0 * h);
      if (df == 0.0) return std::nullopt;
      const cplx step = f / df;
      s -= step;
      if (s.real() < x0 - 1e-9 || s.real() > x1 + 1e-9 || s.imag() < y0 - 1e-9 || s.imag() > y1 + 1e-9)
        return std::nullopt;
      if (std::abs(step) < 0.01 * tol) return s;
    }
    return std::nullopt;
  }

  void refine(double x0, double x1, double y0, double y1, int count, std::vector<ResonanceZero>& out, int depth) {
    if (count == 0) return;
    const double wx = x1 - x0, wy = y1 - y0;
    if (count == 1) {
      if (auto z = newton(cplx(0.5 * (x0 + x1), 0.5 * (y0 + y1)), x0, x1, y0, y1)) {
        ResonanceZero r;
        r.sigma = *z;
        r.residual = std::abs(W(*z));
        const double e = std::max(100.0 * tol, 1e-6);
        r.multiplicity = winding(z->real() - e, z->real() + e, z->imag() - e, z->imag() + e);
        out.push_back(r);
        return;
      }
    }
    if (std::max(wx, wy) < 1e3 * tol || depth > 60) {
      ResonanceZero r;
      r.sigma = cplx(0.5 * (x0 + x1), 0.5 * (y0 + y1));
      r.multiplicity = count;
      r.residual = std::abs(W(r.sigma));
      out.push_back(r);
      return;
    }
    // Split the longer side slightly off centre so a symmetric zero set
    // does not land on the cut.
    for (double frac : {0.5123, 0.4871, 0.5372}) {
      try {
        if (wx >= wy) {
          const double xm = x0 + frac * wx;
          const int a = winding(x0, xm, y0, y1), b = count - a;
          refine(x0, xm, y0, y1, a, out, depth + 1);
          refine(xm, x1, y0, y1, b, out, depth + 1);
        } else {
          const double ym = y0 + frac * wy;
          const int a = winding(x0, x1, y0, ym), b = count - a;
          refine(x0, x1, y0, ym, a, out, depth + 1);
          refine(x0, x1, ym, y1, b, out, depth + 1);
        }
        return;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NearResonance) throw;
      }
    }
    fail(ErrorKind::NearResonance, "could not isolate zeros of the Wronskian");
  }
};

}  // namespace

QnmScanResult qnm_scan(const TortoiseGrid& G, double re_lo, double re_hi, double im_lo, double im_hi, double tol) {
  if (!(re_hi > re_lo) || !(im_hi > im_lo)) fail(ErrorKind::Validation, "empty scan rectangle");
  if (!(tol > 0.0)) fail(ErrorKind::Validation, "tolerance must be positive");
  Scanner sc{G, tol};
  QnmScanResult res;
  double pad = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    try {
      const double x0 = re_lo - pad, x1 = re_hi + pad, y0 = im_lo - pad, y1 = im_hi + pad;
      res.count = sc.winding(x0, x1, y0, y1);
      res.zeros.clear();
      sc.refine(x0, x1, y0, y1, res.count, res.zeros, 0);
      std::sort(res.zeros.begin(), res.zeros.end(), [](const ResonanceZero& a, const ResonanceZero& b) {
        return a.sigma.real() != b.sigma.real() ? a.sigma.real() < b.sigma.real() : a.sigma.imag() < b.sigma.imag();
      });
      res.evaluations = sc.evals;
      return res;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NearResonance) throw;
      pad = (pad == 0.0 ? 1e-3 : 2.0 * pad) * std::max(re_hi - re_lo, im_hi - im_lo);
    }
  }
  fail(ErrorKind::NearResonance, "persistent zero on the scan contour");
}

namespace {

struct SampledMode {
  std::vector<double> s, q, logw;
  ModeSolution h, i;
  cplx W;
  double W_scale;
};

double log_weight_at(const TortoiseGrid& G, double s) {
  if (G.model) return log_tilde_alpha(*G.model, r_of_tortoise(*G.model, s));
  return -std::abs(s);
}

SampledMode sample_mode(const TortoiseGrid& G, cplx sigma, double Ln, double spacing) {
  if (!(Ln > 0.0) || Ln > G.L) fail(ErrorKind::Validation, "kernel window must satisfy 0 < Ln <= L");
  if (!(spacing > 0.0)) fail(ErrorKind::Validation, "spacing must be positive");
  SampledMode m;
  const int N = 2 * static_cast<int>(std::ceil(Ln / spacing)) + 1;
  const double d = 2.0 * Ln / (N - 1);
  for (int k = 0; k < N; ++k) {
    m.s.push_back(-Ln + d * k);
    m.q.push_back(k == 0 || k == N - 1 ? 0.5 * d : d);
    m.logw.push_back(log_weight_at(G, m.s.back()));
  }
  m.h = outgoing_solution(G, sigma, End::H, m.s);
  m.i = outgoing_solution(G, sigma, End::I, m.s);
  const int c = N / 2;
  m.W = m.h.w[c] * m.i.dw[c] - m.h.dw[c] * m.i.w[c];
  m.W_scale = std::abs(m.h.w[c] * m.i.dw[c]) + std::abs(m.h.dw[c] * m.i.w[c]);
  if (std::abs(m.W) < 1e-9 * m.W_scale)
    fail(ErrorKind::NearResonance, "Wronskian nearly vanishes: sigma is close to a resonance");
  return m;
}

}  // namespace

KernelGrid mode_green(const TortoiseGrid& G, cplx sigma, double Ln, double spacing) {
  const SampledMode m = sample_mode(G, sigma, Ln, spacing);
  const int N = static_cast<int>(m.s.size());
  KernelGrid K;
  K.wl = K.wr = m.q;
  for (double lw : m.logw) K.xl.push_back(std::exp(lw));
  K.xr = K.xl;
  K.K.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const int lo = std::min(i, j), hi = std::max(i, j);
      K.K(i, j) = -m.h.w[lo] * m.i.w[hi] / m.W;
    }
  return K;
}

double mode_resolvent_norm(const TortoiseGrid& G, cplx sigma, double b, std::optional<double> logN, double Ln,
                           double spacing) {
  const SampledMode m = sample_mode(G, sigma, Ln, spacing);
  const std::size_t N = m.s.size();
  std::vector<double> a(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double lw = m.logw[k];
    a[k] = std::exp(b * lw) * std::sqrt(m.q[k]);
    if (logN) a[k] *= std::pow(1.0 + lw * lw, -0.5 * *logN);
  }
  // y = A x with A_ij = a_i G_ij a_j, using the separable form of G.
  auto apply = [&](const std::vector<cplx>& x, std::vector<cplx>& y) {
    std::vector<cplx> c(N);
    for (std::size_t j = 0; j < N; ++j) c[j] = a[j] * x[j];
    std::vector<cplx> suffix(N + 1, 0.0);
    for (std::size_t j = N; j-- > 0;) suffix[j] = suffix[j + 1] + m.i.w[j] * c[j];
    cplx prefix = 0.0;
    y.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      prefix += m.h.w[i] * c[i];
      y[i] = -a[i] * (m.i.w[i] * prefix + m.h.w[i] * suffix[i + 1]) / m.W;
    }
  };
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  std::vector<cplx> x(N), y, z, cx(N);
  double nx = 0.0;
  for (auto& v : x) {
    v = cplx(nd(rng), nd(rng));
    nx += std::norm(v);
  }
  nx = std::sqrt(nx);
  for (auto& v : x) v /= nx;
  double est = 0.0;
  for (int it = 0; it < 20000; ++it) {
    apply(x, y);
    // A is complex symmetric, so A^* y = conj(A conj(y)).
    for (std::size_t k = 0; k < N; ++k) cx[k] = std::conj(y[k]);
    apply(cx, z);
    double nz = 0.0;
    for (auto& v : z) {
      v = std::conj(v);
      nz += std::norm(v);
    }
    nz = std::sqrt(nz);
    if (nz == 0.0) return 0.0;
    for (std::size_t k = 0; k < N; ++k) x[k] = z[k] / nz;
    const double next = std::sqrt(nz);
    if (it > 10 && std::abs(next - est) <= 1e-10 * next) return next;
    est = next;
  }
  return est;
}

ModeResolventScan norm_scan(const TortoiseGrid& G, const NormScanOptions& opt) {
  double cap = 1.0;
  if (G.model) cap = std::min({G.model->beta_H, std::abs(G.model->beta_I), 1.0});
  if (!(opt.gamma > 0.0 && opt.gamma < cap))
    fail(ErrorKind::Validation, "gamma must satisfy 0 < gamma < min(beta_H, |beta_I|, 1)");
  const bool edge = std::abs(opt.b - opt.gamma) < 1e-12;
  if (edge) {
    if (!opt.logN || !(*opt.logN > 0.5)) fail(ErrorKind::Validation, "b = gamma requires a log weight N > 1/2");
  } else if (!(opt.b > opt.gamma)) {
    fail(ErrorKind::Validation, "weight exponent b must exceed gamma");
  }
  ModeResolventScan scan;
  scan.ell = G.ell;
  scan.options = opt;
  std::vector<double> res = opt.re_sigma;
  if (res.empty())
    for (int k = 0; k < 8; ++k) res.push_back(std::pow(20.0, k / 7.0));
  const double Ln = opt.Ln > 0.0 ? opt.Ln : std::min(G.L - 5.0, edge ? 60.0 : 14.0 / (opt.b - opt.gamma));
  for (double re : res) {
    NormScanPoint p;
    p.sigma = cplx(re, opt.gamma);
    const double sp = opt.spacing > 0.0 ? opt.spacing : std::min(0.05, 0.6 / std::abs(p.sigma));
    try {
      p.wronskian = wronskian(G, p.sigma).W;
      p.norm = mode_resolvent_norm(G, p.sigma, opt.b, opt.logN, Ln, sp);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NearResonance) throw;
      p.resonant = true;
      p.norm = std::numeric_limits<double>::infinity();
    }
    scan.points.push_back(p);
  }
  // Fit over the upper half of the |Re sigma| range.
  std::vector<std::pair<double, double>> pts;
  double lo = 1e300, hi = 0.0;
  for (const auto& p : scan.points) {
    lo = std::min(lo, std::abs(p.sigma.real()));
    hi = std::max(hi, std::abs(p.sigma.real()));
  }
  const double mid = std::sqrt(lo * hi);
  for (const auto& p : scan.points)
    if (std::abs(p.sigma.real()) >= mid * (1.0 - 1e-12) && std::isfinite(p.norm))
      pts.push_back({std::log(std::abs(p.sigma.real())), std::log(p.norm)});
  if (pts.size() >= 2) {
    double mx = 0, my = 0;
    for (auto& [x, y] : pts) {
      mx += x / pts.size();
      my += y / pts.size();
    }
    double sxy = 0, sxx = 0;
    for (auto& [x, y] : pts) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    scan.growth_exponent = sxy / sxx;
  }
  return scan;
}

}  // namespace rl
