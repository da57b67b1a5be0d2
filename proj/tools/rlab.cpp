// rlab: command-line front end for the resolvent-construction library.
//
// Every subcommand writes <out>/<stem>.header.json (configuration echo,
// version, derived constants) and <out>/<stem>.csv or .jsonl (one record per
// row). Exit status: 0 success, 2 invalid input, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "rl/desitter.hpp"
#include "rl/errors.hpp"
#include "rl/glue.hpp"
#include "rl/hamflow.hpp"
#include "rl/hypgeo.hpp"
#include "rl/metric.hpp"
#include "rl/parametrix3d.hpp"
#include "rl/radialsolve.hpp"
#include "rl/schur.hpp"

using json = nlohmann::ordered_json;
using namespace rl;

namespace {

constexpr const char* kVersion = "resolvlab 1.0.0";

struct Common {
  std::string out = "rlab_out";
  std::string format = "csv";
  int threads = 1;
  std::uint64_t seed = 1;
};

cplx parse_complex(const std::string& text) {
  static const std::regex full(R"(^\s*([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*(?:([+-])\s*([0-9.]+(?:[eE][+-]?[0-9]+)?)?\s*[ij])?\s*$)");
  static const std::regex imag_only(R"(^\s*([+-]?[0-9.]*(?:[eE][+-]?[0-9]+)?)\s*[ij]\s*$)");
  std::smatch m;
  try {
    if (std::regex_match(text, m, full)) {
      const double re = std::stod(m[1].str());
      double im = 0.0;
      if (m[2].matched) {
        im = m[3].matched ? std::stod(m[3].str()) : 1.0;
        if (m[2].str() == "-") im = -im;
      }
      return {re, im};
    }
    if (std::regex_match(text, m, imag_only)) {
      const std::string s = m[1].str();
      const double im = (s.empty() || s == "+") ? 1.0 : s == "-" ? -1.0 : std::stod(s);
      return {0.0, im};
    }
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Validation, "cannot parse complex number '" + text + "' (use e.g. 2-0.01i)");
}

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

// Runs f(0..n-1) on a bounded pool; results are stored by index so the
// output order never depends on scheduling. The lowest-index failure wins.
template <class F>
auto parallel_map(int n, int threads, F&& f) -> std::vector<decltype(f(0))> {
  using R = decltype(f(0));
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const int t = std::max(1, std::min(threads, n));
  std::vector<std::thread> pool;
  for (int k = 1; k < t; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string csv_cell(const json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

void emit(const Common& c, const std::string& stem, json header, const std::vector<std::string>& columns,
          const std::vector<json>& rows) {
  std::filesystem::create_directories(c.out);
  const std::string data_name = stem + (c.format == "jsonl" ? ".jsonl" : ".csv");
  header["version"] = kVersion;
  header["data_file"] = data_name;
  header["columns"] = columns;
  header["rows"] = rows.size();
  {
    std::ofstream h(std::filesystem::path(c.out) / (stem + ".header.json"));
    h << header.dump(2) << "\n";
  }
  std::ofstream d(std::filesystem::path(c.out) / data_name);
  if (c.format == "jsonl") {
    for (const json& r : rows) {
      json rec;
      for (const auto& col : columns) rec[col] = r.at(col);
      d << rec.dump() << "\n";
    }
    return;
  }
  for (std::size_t k = 0; k < columns.size(); ++k) d << (k ? "," : "") << columns[k];
  d << "\n";
  for (const json& r : rows) {
    for (std::size_t k = 0; k < columns.size(); ++k) d << (k ? "," : "") << csv_cell(r.at(columns[k]));
    d << "\n";
  }
}

json common_json(const Common& c) {
  return {{"seed", c.seed}, {"threads", c.threads}, {"output_dir", c.out}, {"format", c.format}};
}

Vec random_ball_point(std::mt19937_64& rng, int dim, double rmax) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  Vec v(dim);
  for (int k = 0; k < dim; ++k) v[k] = nd(rng);
  v.normalize();
  return v * (rmax * std::pow(ud(rng), 1.0 / dim));
}

// ---------------------------------------------------------------- distance
struct DistanceArgs {
  int n = 2, pairs = 100;
  double delta = 0.0, rmax = 0.9;
  std::string H = "zero", W = "zero";
};

void run_distance(const Common& c, const DistanceArgs& a) {
  const MetricSpec spec = make_metric_spec(a.n, a.delta, a.H, a.W);
  if (a.pairs < 1) fail(ErrorKind::Validation, "--pairs must be positive");
  if (!(a.rmax > 0.0 && a.rmax < 1.0)) fail(ErrorKind::Validation, "--rmax must lie in (0, 1)");
  std::mt19937_64 rng(c.seed);
  const int dim = a.n + 1;
  std::vector<std::pair<Vec, Vec>> pts;
  for (int i = 0; i < a.pairs; ++i) {
    Vec z = random_ball_point(rng, dim, a.rmax);
    Vec zp = random_ball_point(rng, dim, a.rmax);
    pts.emplace_back(z, zp);
  }
  auto rows = parallel_map(a.pairs, c.threads, [&](int i) {
    const BallPoint z(pts[i].first), zp(pts[i].second);
    const DistanceResult d = distance_flow(spec, z, zp);
    const double d0 = dist0_closed(z, zp);
    json r;
    r["index"] = i;
    for (int k = 0; k < dim; ++k) r["z" + std::to_string(k)] = z.coords()[k];
    for (int k = 0; k < dim; ++k) r["zp" + std::to_string(k)] = zp.coords()[k];
    r["dist_flow"] = d.distance;
    r["dist_closed_delta0"] = d0;
    r["rel_diff"] = std::abs(d.distance - d0) / d0;
    r["F"] = log_structure_F(z, zp);
    r["iterations"] = d.iterations;
    return r;
  });
  std::vector<std::string> cols = {"index"};
  for (int k = 0; k < dim; ++k) cols.push_back("z" + std::to_string(k));
  for (int k = 0; k < dim; ++k) cols.push_back("zp" + std::to_string(k));
  for (const char* s : {"dist_flow", "dist_closed_delta0", "rel_diff", "F", "iterations"}) cols.push_back(s);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r["rel_diff"].get<double>());
  json h = {{"command", "distance"},
            {"config", {{"n", a.n}, {"delta", a.delta}, {"H", a.H}, {"W", a.W}, {"pairs", a.pairs}, {"rmax", a.rmax}}},
            {"common", common_json(c)},
            {"derived", {{"max_rel_diff", worst}}}};
  emit(c, "distance", h, cols, rows);
  std::printf("distance: %d pairs, max relative difference to the delta=0 closed form %.3e\n", a.pairs, worst);
}

// -------------------------------------------------------------------- flow
struct FlowArgs {
  int n = 2, samples = 101;
  double x = 1.0, lambda = 0.0, mu = 1.0, T = 5.0;
};

void run_flow(const Common& c, const FlowArgs& a) {
  if (a.n < 1 || a.n > kMaxDim - 1) fail(ErrorKind::Validation, "--n must be 1..3");
  HalfspaceState s;
  s.x = a.x;
  s.lambda = a.lambda;
  s.y = Vec::Zero(a.n);
  s.mu = Vec::Zero(a.n);
  s.mu[0] = a.mu;
  const auto samples = halfspace_flow0(s, a.T, a.samples);
  std::vector<json> rows;
  double drift = 0.0;
  const double e0 = samples.front().energy2;
  for (const auto& p : samples) {
    json r;
    r["t"] = p.t;
    r["x"] = p.s.x;
    for (int k = 0; k < a.n; ++k) r["y" + std::to_string(k)] = p.s.y[k];
    r["lambda"] = p.s.lambda;
    for (int k = 0; k < a.n; ++k) r["mu" + std::to_string(k)] = p.s.mu[k];
    r["energy2"] = p.energy2;
    drift = std::max(drift, std::abs(p.energy2 - e0) / std::max(e0, 1e-300));
    rows.push_back(r);
  }
  std::vector<std::string> cols = {"t", "x"};
  for (int k = 0; k < a.n; ++k) cols.push_back("y" + std::to_string(k));
  cols.push_back("lambda");
  for (int k = 0; k < a.n; ++k) cols.push_back("mu" + std::to_string(k));
  cols.push_back("energy2");
  json h = {{"command", "flow"},
            {"config", {{"n", a.n}, {"x", a.x}, {"lambda", a.lambda}, {"mu", a.mu}, {"T", a.T}, {"samples", a.samples}}},
            {"common", common_json(c)},
            {"derived", {{"max_rel_energy_drift", drift}}}};
  emit(c, "flow", h, cols, rows);
  std::printf("flow: %zu samples, max relative drift of lambda^2+|mu|^2 %.3e\n", samples.size(), drift);
}

// --------------------------------------------------------------- parametrix
struct ParametrixArgs {
  double delta = 0.0, b = 0.5;
  std::string H = "zero", W = "zero", sigma = "1.5";
  std::vector<double> h = {0.1};
  int panels = 2, nodes = 2, level = 0;
};

void run_parametrix(const Common& c, const ParametrixArgs& a) {
  const MetricSpec spec = make_metric_spec(2, a.delta, a.H, a.W);
  const cplx sigma = parse_complex(a.sigma);
  if (sigma == cplx(0.0)) fail(ErrorKind::Validation, "--sigma must be nonzero");
  for (double h : a.h)
    if (!(h > 0.0)) fail(ErrorKind::Validation, "--h values must be positive");
  const BallGrid grid = make_ball_grid(a.panels, a.nodes, a.level);
  const AmplitudeTable T = compute_amplitudes(spec, grid);
  const bool exact_case = a.delta == 0.0 && a.W == "zero";
  double max_u1hat = 0.0;
  for (const auto& p : T.amps) max_u1hat = std::max(max_u1hat, std::abs(p.U1hat));
  const double max_u1 = max_u1hat / (8.0 * kPi * std::abs(sigma));
  auto rows = parallel_map(static_cast<int>(a.h.size()), c.threads, [&](int k) {
    SpectralPoint sp;
    sp.h = a.h[k];
    sp.sigma = sigma;
    sp.validate();
    double max_e = 0.0, g_err = 0.0;
    for (int i = 0; i < T.N; ++i)
      for (int j = 0; j < T.N; ++j) {
        if (i == j) continue;
        const PairAmplitudes& p = T.at(i, j);
        max_e = std::max(max_e, std::abs(error_from(p, sp)));
        if (exact_case) {
          const cplx ex = exact_h3_kernel(sp.sigma / sp.h, p.r) / (sp.h * sp.h);
          g_err = std::max(g_err, std::abs(parametrix_from(p, sp) / ex - 1.0));
        }
      }
    json r;
    r["h"] = sp.h;
    r["max_U1"] = max_u1;
    r["max_E"] = max_e;
    r["G_exact_rel_err"] = exact_case ? json(g_err) : json("n/a");
    r["E_weighted_norm"] = weighted_error_norm(T, grid, sp, a.b);
    return r;
  });
  json h = {{"command", "parametrix"},
            {"config",
             {{"delta", a.delta}, {"H", a.H}, {"W", a.W}, {"sigma", cjson(sigma)}, {"h", a.h}, {"b", a.b},
              {"panels", a.panels}, {"nodes", a.nodes}, {"sphere_level", a.level}}},
            {"common", common_json(c)},
            {"derived", {{"grid_nodes", grid.size()}, {"distinct_pairs", T.distinct_pairs}, {"max_U1", max_u1}}}};
  emit(c, "parametrix", h, {"h", "max_U1", "max_E", "G_exact_rel_err", "E_weighted_norm"}, rows);
  for (const auto& r : rows)
    std::printf("parametrix: h=%g max|U1|=%.3e max|E|=%.3e ||E_w||=%.4e\n", r["h"].get<double>(), max_u1,
                r["max_E"].get<double>(), r["E_weighted_norm"].get<double>());
}

// ------------------------------------------------------------------- norms
struct SchurArgs {
  double alpha = 1.5, beta = 1.5, C = 1.0, logN = -1.0, t_max = 16.0;
  int n = 2;
};

void run_norms_schur(const Common& c, const SchurArgs& a) {
  const std::optional<double> logN = a.logN >= 0.0 ? std::optional<double>(a.logN) : std::nullopt;
  const std::optional<double> bound = schur_bound(a.alpha, a.beta, a.C, a.n, logN, a.t_max);
  json r;
  r["alpha"] = a.alpha;
  r["beta"] = a.beta;
  r["C"] = a.C;
  r["logN"] = a.logN;
  r["bound"] = bound ? json(*bound) : json("DIVERGENT");
  json h = {{"command", "norms schur"},
            {"config", {{"alpha", a.alpha}, {"beta", a.beta}, {"C", a.C}, {"n", a.n}, {"logN", a.logN}, {"t_max", a.t_max}}},
            {"common", common_json(c)},
            {"derived", {{"finite", bound.has_value()}}}};
  emit(c, "norms_schur", h, {"alpha", "beta", "C", "logN", "bound"}, {r});
  if (bound) std::printf("schur: bound %.6g\n", *bound);
  else std::printf("schur: DIVERGENT\n");
}

struct ResolventArgs {
  double delta = 0.0, a = 0.5, b = 0.5;
  std::string H = "zero", W = "gauss:1", sigma = "1.5";
  std::vector<double> h = {0.1, 0.05, 0.025, 0.0125};
  int panels = 6, nodes = 2, level = 0;
};

void run_norms_resolvent(const Common& c, const ResolventArgs& a) {
  const MetricSpec spec = make_metric_spec(2, a.delta, a.H, a.W);
  const cplx sigma = parse_complex(a.sigma);
  const BallGrid grid = make_ball_grid(a.panels, a.nodes, a.level);
  const AmplitudeTable T = compute_amplitudes(spec, grid);
  auto rows = parallel_map(static_cast<int>(a.h.size()), c.threads, [&](int k) {
    SpectralPoint sp;
    sp.h = a.h[k];
    sp.sigma = sigma;
    sp.validate();
    const KernelGrid G = parametrix_grid(T, grid, sp);
    const KernelGrid E = error_grid(T, grid, sp);
    json r;
    r["h"] = sp.h;
    try {
      const AssembledResolvent R = resolvent_assemble(G, E, a.a, a.b);
      r["E_w_norm"] = R.e_norm;
      r["G_w_norm"] = R.g_norm;
      r["R_w_norm"] = R.norm;
      r["residual"] = R.residual;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ModelValidity) throw;
      r["E_w_norm"] = "neumann_fails";
      r["G_w_norm"] = "n/a";
      r["R_w_norm"] = "n/a";
      r["residual"] = "n/a";
    }
    return r;
  });
  json h = {{"command", "norms resolvent"},
            {"config",
             {{"delta", a.delta}, {"H", a.H}, {"W", a.W}, {"sigma", cjson(sigma)}, {"a", a.a}, {"b", a.b},
              {"h", a.h}, {"panels", a.panels}, {"nodes", a.nodes}, {"sphere_level", a.level}}},
            {"common", common_json(c)},
            {"derived", {{"grid_nodes", grid.size()}}}};
  emit(c, "norms_resolvent", h, {"h", "E_w_norm", "G_w_norm", "R_w_norm", "residual"}, rows);
  for (const auto& r : rows) std::printf("resolvent: h=%g ||E_w||=%s ||R_w||=%s\n", r["h"].get<double>(),
                                         r["E_w_norm"].dump().c_str(), r["R_w_norm"].dump().c_str());
}

// --------------------------------------------------------------------- dss
struct DssArgs {
  double m = 1.0, Lambda = 0.1;
  int n = 2;
  std::vector<int> ells = {0, 1, 2};
  double re_lo = -0.5, re_hi = 0.5, im_lo = -0.1, im_hi = 0.02, tol = 1e-8;
  double b = 0.25, gamma = 0.02, logN = -1.0;
  std::vector<double> re_sigma;
};

json model_json(const DSSModel& M) {
  return {{"r_H", M.r_H}, {"r_I", M.r_I}, {"r_neg", M.r_neg}, {"beta_H", M.beta_H}, {"beta_I", M.beta_I},
          {"r_peak", M.r_peak}, {"alpha_peak", M.alpha_peak}};
}

json dss_config(const DssArgs& a) { return {{"m", a.m}, {"Lambda", a.Lambda}, {"n", a.n}}; }

void run_dss_horizons(const Common& c, const DssArgs& a) {
  const Horizons hz = horizons(a.m, a.Lambda);
  json r = {{"r_H", hz.r_H}, {"r_I", hz.r_I}, {"r_neg", hz.r_neg}, {"degenerate", hz.degenerate}};
  std::vector<std::string> cols = {"r_H", "r_I", "r_neg", "degenerate"};
  json derived = json::object();
  if (!hz.degenerate) {
    const DSSModel M = make_dss_model(a.m, a.Lambda, a.n);
    r["beta_H"] = M.beta_H;
    r["beta_I"] = M.beta_I;
    cols.push_back("beta_H");
    cols.push_back("beta_I");
    derived = model_json(M);
    std::printf("r_H = %.10f  r_I = %.10f  beta_H = %.6f  beta_I = %.6f\n", M.r_H, M.r_I, M.beta_H, M.beta_I);
  } else {
    std::printf("degenerate horizons: double root r = %.10f (9 m^2 Lambda = 1)\n", hz.r_H);
    std::fprintf(stderr, "warning: degenerate horizons\n");
  }
  json h = {{"command", "dss horizons"}, {"config", dss_config(a)}, {"common", common_json(c)}, {"derived", derived}};
  emit(c, "dss_horizons", h, cols, {r});
}

void run_dss_qnm(const Common& c, const DssArgs& a) {
  const DSSModel M = make_dss_model(a.m, a.Lambda, a.n);
  auto scans = parallel_map(static_cast<int>(a.ells.size()), c.threads, [&](int k) {
    const TortoiseGrid G = tortoise(M, a.ells[k]);
    return qnm_scan(G, a.re_lo, a.re_hi, a.im_lo, a.im_hi, a.tol);
  });
  std::vector<json> rows;
  json counts = json::object();
  for (std::size_t k = 0; k < scans.size(); ++k) {
    counts["ell_" + std::to_string(a.ells[k])] = scans[k].count;
    std::printf("ell=%d: %d zero(s) in the rectangle\n", a.ells[k], scans[k].count);
    for (const auto& z : scans[k].zeros) {
      rows.push_back({{"ell", a.ells[k]}, {"re_sigma", z.sigma.real()}, {"im_sigma", z.sigma.imag()},
                      {"multiplicity", z.multiplicity}, {"residual", z.residual}});
      std::printf("  sigma = %.12g %+.12gi (multiplicity %d)\n", z.sigma.real(), z.sigma.imag(), z.multiplicity);
    }
  }
  json cfg = dss_config(a);
  cfg["ells"] = a.ells;
  cfg["rectangle"] = {a.re_lo, a.re_hi, a.im_lo, a.im_hi};
  cfg["tol"] = a.tol;
  json derived = model_json(M);
  derived["counts"] = counts;
  json h = {{"command", "dss qnm"}, {"config", cfg}, {"common", common_json(c)}, {"derived", derived}};
  emit(c, "dss_qnm", h, {"ell", "re_sigma", "im_sigma", "multiplicity", "residual"}, rows);
}

void run_dss_norm_scan(const Common& c, const DssArgs& a) {
  const DSSModel M = make_dss_model(a.m, a.Lambda, a.n);
  NormScanOptions o;
  o.b = a.b;
  o.gamma = a.gamma;
  if (a.logN >= 0.0) o.logN = a.logN;
  o.re_sigma = a.re_sigma;
  auto scans = parallel_map(static_cast<int>(a.ells.size()), c.threads,
                            [&](int k) { return norm_scan(tortoise(M, a.ells[k]), o); });
  std::vector<json> rows;
  json fits = json::object();
  for (const auto& s : scans) {
    fits["ell_" + std::to_string(s.ell)] = s.growth_exponent;
    std::printf("ell=%d: growth exponent %.4f\n", s.ell, s.growth_exponent);
    for (const auto& p : s.points)
      rows.push_back({{"ell", s.ell}, {"re_sigma", p.sigma.real()}, {"im_sigma", p.sigma.imag()},
                      {"norm", p.norm}, {"abs_wronskian", std::abs(p.wronskian)}, {"resonant", p.resonant}});
  }
  json cfg = dss_config(a);
  cfg["ells"] = a.ells;
  cfg["b"] = a.b;
  cfg["gamma"] = a.gamma;
  cfg["logN"] = a.logN;
  cfg["re_sigma"] = a.re_sigma;
  json derived = model_json(M);
  derived["growth_exponents"] = fits;
  json h = {{"command", "dss norm-scan"}, {"config", cfg}, {"common", common_json(c)}, {"derived", derived}};
  emit(c, "dss_norm_scan", h, {"ell", "re_sigma", "im_sigma", "norm", "abs_wronskian", "resonant"}, rows);
}

void run_dss_end_check(const Common& c, const DssArgs& a) {
  const DSSModel M = make_dss_model(a.m, a.Lambda, a.n);
  std::vector<json> rows;
  json derived = model_json(M);
  bool ok = true;
  for (End e : {End::H, End::I}) {
    const EndCheckReport rep = model_end_check(M, e);
    const std::string name = e == End::H ? "H" : "I";
    derived["exponent_" + name] = rep.exponent;
    derived["curvature_exponent_" + name] = rep.curvature_exponent;
    ok = ok && rep.ok;
    for (std::size_t k = 0; k < rep.scales.size(); ++k)
      rows.push_back({{"end", name}, {"scale", rep.scales[k]}, {"discrepancy", rep.discrepancies[k]}});
    std::printf("end %s: exponent %.4f, curvature exponent %.4f, %s\n", name.c_str(), rep.exponent,
                rep.curvature_exponent, rep.ok ? "ok" : rep.message.c_str());
  }
  derived["ok"] = ok;
  json h = {{"command", "dss end-check"}, {"config", dss_config(a)}, {"common", common_json(c)}, {"derived", derived}};
  emit(c, "dss_end_check", h, {"end", "scale", "discrepancy"}, rows);
  if (!ok) fail(ErrorKind::ModelValidity, "end model check failed");
}

// -------------------------------------------------------------------- glue
struct GlueArgs {
  double m = 1.0, Lambda = 0.1, delta = 0.0, L = 40.0;
  int ell = 0;
  std::string sigma = "2-0.01i";
  std::vector<double> h = {1.25e-4};
  std::vector<double> m_norm_re;
  double gamma = 0.02;
};

void run_glue_verify(const Common& c, const GlueArgs& a) {
  const DSSModel M = make_dss_model(a.m, a.Lambda);
  const cplx sigma = parse_complex(a.sigma);
  auto rows = parallel_map(static_cast<int>(a.h.size()), c.threads, [&](int k) {
    GlueOptions o;
    o.delta = a.delta;
    o.L = a.L;
    o.h = a.h[k];
    const GlueResiduals r = gluing_residual(M, a.ell, sigma, o);
    return json{{"h", r.h},
                {"grid_size", r.grid_size},
                {"residentity1", r.residentity1},
                {"residentity2", r.residentity2},
                {"brpkid", r.brpkid},
                {"brpkid_literal", r.brpkid_literal}};
  });
  double worst = 0.0;
  for (const auto& r : rows) {
    std::printf("h=%g residuals: %.3e %.3e %.3e (literal decomposition %.3e)\n", r["h"].get<double>(),
                r["residentity1"].get<double>(), r["residentity2"].get<double>(), r["brpkid"].get<double>(),
                r["brpkid_literal"].get<double>());
  }
  const json& fine = rows.back();
  worst = std::max({fine["residentity1"].get<double>(), fine["residentity2"].get<double>(), fine["brpkid"].get<double>()});
  json cfg = {{"m", a.m}, {"Lambda", a.Lambda}, {"ell", a.ell}, {"sigma", cjson(sigma)}, {"delta", a.delta},
              {"L", a.L}, {"h", a.h}, {"m_norm_re", a.m_norm_re}, {"gamma", a.gamma}};
  json derived = {{"max_residual_finest", worst}};
  if (!a.m_norm_re.empty()) {
    GlueOptions o;
    o.delta = a.delta;
    o.L = a.L;
    o.h = a.h.front();
    auto mn = parallel_map(static_cast<int>(a.m_norm_re.size()), c.threads,
                           [&](int k) { return m_norms(M, a.ell, cplx(a.m_norm_re[k], a.gamma), o); });
    json arr = json::array();
    for (const auto& p : mn) arr.push_back({{"re_sigma", p.sigma.real()}, {"M1", p.m1}, {"M2", p.m2}});
    derived["m_norms"] = arr;
  }
  json h = {{"command", "glue verify"}, {"config", cfg}, {"common", common_json(c)}, {"derived", derived}};
  emit(c, "glue_verify", h, {"h", "grid_size", "residentity1", "residentity2", "brpkid", "brpkid_literal"}, rows);
  std::printf("max residual at the finest grid: %.3e\n", worst);
}

void write_failure(const Common& c, const std::string& command, const std::string& kind, const std::string& msg) {
  json rec = {{"command", command}, {"status", "failed"}, {"kind", kind}, {"message", msg}, {"version", kVersion}};
  std::fprintf(stderr, "%s\n", rec.dump().c_str());
  try {
    std::filesystem::create_directories(c.out);
    std::ofstream(std::filesystem::path(c.out) / "failure.json") << rec.dump(2) << "\n";
  } catch (...) {
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rlab: resolvent constructions on asymptotically hyperbolic and de Sitter-Schwarzschild models"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "INI/TOML configuration file (flags override it)");
  app.require_subcommand(1);
  Common common;
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads for independent scan points")
      ->check(CLI::Range(1, 256))
      ->capture_default_str();
  app.add_option("--seed", common.seed, "Random seed")->capture_default_str();
  app.add_option("--format", common.format, "Data format")->check(CLI::IsMember({"csv", "jsonl"}))->capture_default_str();

  std::string selected;
  std::function<void()> action;

  DistanceArgs da;
  auto* dist = app.add_subcommand("distance", "Flow distance vs closed form on random pairs");
  dist->add_option("--n", da.n, "Boundary dimension")->capture_default_str();
  dist->add_option("--delta", da.delta, "Cutoff scale of the perturbation")->capture_default_str();
  dist->add_option("--H", da.H, "Tensor perturbation field")->capture_default_str();
  dist->add_option("--W", da.W, "Scalar potential field")->capture_default_str();
  dist->add_option("--pairs", da.pairs, "Number of random pairs")->capture_default_str();
  dist->add_option("--rmax", da.rmax, "Euclidean radius bound of sampled points")->capture_default_str();
  dist->callback([&] { selected = "distance"; action = [&] { run_distance(common, da); }; });

  FlowArgs fa;
  auto* flow = app.add_subcommand("flow", "Model half-space Hamilton flow diagnostics");
  flow->add_option("--n", fa.n)->capture_default_str();
  flow->add_option("--x", fa.x)->capture_default_str();
  flow->add_option("--lambda", fa.lambda)->capture_default_str();
  flow->add_option("--mu", fa.mu, "First component of mu")->capture_default_str();
  flow->add_option("--T", fa.T)->capture_default_str();
  flow->add_option("--samples", fa.samples)->capture_default_str();
  flow->callback([&] { selected = "flow"; action = [&] { run_flow(common, fa); }; });

  ParametrixArgs pa;
  auto* par = app.add_subcommand("parametrix", "Parametrix amplitudes and error kernel on a ball grid");
  par->add_option("--delta", pa.delta)->capture_default_str();
  par->add_option("--H", pa.H)->capture_default_str();
  par->add_option("--W", pa.W)->capture_default_str();
  par->add_option("--sigma", pa.sigma, "Spectral parameter, e.g. 1.5 or 2-0.1i")->capture_default_str();
  par->add_option("--h", pa.h, "Semiclassical parameter(s)")->capture_default_str();
  par->add_option("--b", pa.b, "Weight exponent for ||x^-b E x^b||")->capture_default_str();
  par->add_option("--panels", pa.panels)->capture_default_str();
  par->add_option("--nodes", pa.nodes)->capture_default_str();
  par->add_option("--sphere-level", pa.level)->capture_default_str();
  par->callback([&] { selected = "parametrix"; action = [&] { run_parametrix(common, pa); }; });

  auto* norms = app.add_subcommand("norms", "Schur bounds and resolvent assembly");
  norms->require_subcommand(1);
  SchurArgs sa;
  auto* schur = norms->add_subcommand("schur", "Schur-test bound for the model kernel");
  schur->add_option("--alpha", sa.alpha)->capture_default_str();
  schur->add_option("--beta", sa.beta)->capture_default_str();
  schur->add_option("--C", sa.C)->capture_default_str();
  schur->add_option("--n", sa.n)->capture_default_str();
  schur->add_option("--logN", sa.logN, "Log-weight power N (negative: no log weight)")->capture_default_str();
  schur->add_option("--t-max", sa.t_max)->capture_default_str();
  schur->callback([&] { selected = "norms schur"; action = [&] { run_norms_schur(common, sa); }; });
  ResolventArgs ra;
  auto* res = norms->add_subcommand("resolvent", "Assembled weighted resolvent over an h sweep");
  res->add_option("--delta", ra.delta)->capture_default_str();
  res->add_option("--H", ra.H)->capture_default_str();
  res->add_option("--W", ra.W)->capture_default_str();
  res->add_option("--sigma", ra.sigma)->capture_default_str();
  res->add_option("--a", ra.a)->capture_default_str();
  res->add_option("--b", ra.b)->capture_default_str();
  res->add_option("--h", ra.h)->capture_default_str();
  res->add_option("--panels", ra.panels)->capture_default_str();
  res->add_option("--nodes", ra.nodes)->capture_default_str();
  res->add_option("--sphere-level", ra.level)->capture_default_str();
  res->callback([&] { selected = "norms resolvent"; action = [&] { run_norms_resolvent(common, ra); }; });

  auto* dss = app.add_subcommand("dss", "de Sitter-Schwarzschild model");
  dss->require_subcommand(1);
  DssArgs sa2;
  auto model_opts = [&](CLI::App* s) {
    s->add_option("--m", sa2.m)->capture_default_str();
    s->add_option("--lambda", sa2.Lambda, "Cosmological constant")->capture_default_str();
    s->add_option("--n", sa2.n)->capture_default_str();
  };
  auto* hz = dss->add_subcommand("horizons", "Horizons and surface gravities");
  model_opts(hz);
  hz->callback([&] { selected = "dss horizons"; action = [&] { run_dss_horizons(common, sa2); }; });
  auto* qnm = dss->add_subcommand("qnm", "Argument-principle resonance scan per mode");
  model_opts(qnm);
  qnm->add_option("--ell", sa2.ells)->capture_default_str();
  qnm->add_option("--re-lo", sa2.re_lo)->capture_default_str();
  qnm->add_option("--re-hi", sa2.re_hi)->capture_default_str();
  qnm->add_option("--im-lo", sa2.im_lo)->capture_default_str();
  qnm->add_option("--im-hi", sa2.im_hi)->capture_default_str();
  qnm->add_option("--tol", sa2.tol)->capture_default_str();
  qnm->callback([&] { selected = "dss qnm"; action = [&] { run_dss_qnm(common, sa2); }; });
  auto* ns = dss->add_subcommand("norm-scan", "Weighted mode-resolvent norms along Im sigma = gamma");
  model_opts(ns);
  ns->add_option("--ell", sa2.ells)->capture_default_str();
  ns->add_option("--b", sa2.b)->capture_default_str();
  ns->add_option("--gamma", sa2.gamma)->capture_default_str();
  ns->add_option("--logN", sa2.logN, "Log-weight power N (negative: none)")->capture_default_str();
  ns->add_option("--re-sigma", sa2.re_sigma, "Real parts to scan (default 20^{k/7})");
  ns->callback([&] { selected = "dss norm-scan"; action = [&] { run_dss_norm_scan(common, sa2); }; });
  auto* ec = dss->add_subcommand("end-check", "Compare each end with its hyperbolic model");
  model_opts(ec);
  ec->callback([&] { selected = "dss end-check"; action = [&] { run_dss_end_check(common, sa2); }; });

  auto* glue = app.add_subcommand("glue", "Resolvent gluing identities");
  glue->require_subcommand(1);
  GlueArgs ga;
  auto* gv = glue->add_subcommand("verify", "Residuals of the gluing identities for one mode");
  gv->add_option("--m", ga.m)->capture_default_str();
  gv->add_option("--lambda", ga.Lambda)->capture_default_str();
  gv->add_option("--ell", ga.ell)->capture_default_str();
  gv->add_option("--sigma", ga.sigma)->capture_default_str();
  gv->add_option("--delta", ga.delta, "Cutoff scale (0: (r_I - r_H)/12)")->capture_default_str();
  gv->add_option("--L", ga.L, "Tortoise half-width")->capture_default_str();
  gv->add_option("--h", ga.h, "Grid spacing(s); the last is the reported fine grid")->capture_default_str();
  gv->add_option("--m-norms", ga.m_norm_re, "Re sigma values for ||M1||, ||M2|| at Im sigma = gamma");
  gv->add_option("--gamma", ga.gamma)->capture_default_str();
  gv->callback([&] { selected = "glue verify"; action = [&] { run_glue_verify(common, ga); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    action();
  } catch (const Error& e) {
    write_failure(common, selected, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Validation ? 2 : 3;
  } catch (const std::exception& e) {
    write_failure(common, selected, "internal", e.what());
    return 3;
  }
  return 0;
}
