#include "vkci/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace vkci {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    throw config_error("bad value for key '" + key + "': " + v);
  }
  if (pos != v.size()) throw config_error("bad value for key '" + key + "': " + v);
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long x;
  try {
    x = std::stol(v, &pos);
  } catch (...) {
    throw config_error("bad value for key '" + key + "': " + v);
  }
  if (pos != v.size()) throw config_error("bad value for key '" + key + "': " + v);
  return x;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) throw config_error("empty list for key '" + key + "'");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot open " + path);
  os << text;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void write_manifest(const ExperimentConfig& c, const std::map<std::string, double>& timings) {
  json j;
  j["config"] = canonical_config(c);
  j["versions"] = {{"artifact", "1.0.0"},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION)},
                   {"fftw", "3"}};
  for (const auto& [k, v] : timings) j["timings_s"][k] = v;
  write_text(c.out + "/manifest.json", j.dump(2));
}

GridField identity_times(const Domain& dom, const std::function<double(double)>& f) {
  GridField A = GridField::symmatrix(dom);
  for_each_point(dom, dom.margin, [&](long flat, const std::array<double, kMaxDim>& x) {
    const double s = f(x[0]);
    for (int i = 0; i < dom.dim; ++i) A.sym(i, i, flat) = s;
  });
  return A;
}

// ---------------------------------------------------------------- step-verify

void run_step_verify(const ExperimentConfig& c, std::map<std::string, double>& timings) {
  Timer t;
  double prof = 0;
  for (int i = 0; i < 10000; ++i) {
    const double tt = -18.0 + 36.0 * i / 9999.0;
    const double dG = 2 * std::cos(tt), dGd = -std::cos(2 * tt), dGb = std::sin(2 * tt);
    prof = std::max(prof, std::abs(0.5 * dG * dG + dGd - 1.0));
    prof = std::max(prof,
                    std::abs(dG * StepProfile::gamma(tt) - dGb + 2 * StepProfile::gamma_dbar(tt)));
  }

  std::vector<long> ns = c.n > 0 ? std::vector<long>{c.n, c.n * 2}
                                 : std::vector<long>{96, 128, 192, 256};
  std::vector<std::array<double, 3>> rows;  // n, corrugation, spiral
  for (long n : ns) {
    Domain dom(2, n, 14);
    GridField v = sample(dom, FieldKind::vector, 2,
                         [](const std::array<double, kMaxDim>& x, double* o) {
                           o[0] = x[0] * x[0];
                           o[1] = 0.5 * x[0] * x[1];
                         });
    GridField w(dom, FieldKind::vector, 2);
    GridField a = sample(dom, FieldKind::scalar, 1,
                         [](const std::array<double, kMaxDim>& x, double* o) {
                           o[0] = std::sin(2 * M_PI * x[1]);
                         });
    Eigen::VectorXd eta(2), E1(2), E2(2);
    eta << 1, 0;
    E1 << 1, 0;
    E2 << 0, 1;
    StepSpec sc{a, eta, E1, 8 * M_PI};
    auto [vc, wc] = corrugation_step(v, w, sc);
    const double rc = sup_norm(corrugation_residual(v, w, vc, wc, sc));
    SpiralSpec sp{a, eta, E1, E2, 8 * M_PI};
    auto [vs, ws] = spiral_step(v, w, sp);
    const double rs = sup_norm(spiral_residual(v, w, vs, ws, sp));
    rows.push_back({double(n), rc, rs});
    if (n == ns.front()) {
      dump_field(vc, c.out + "/corrugated_v.fld");
      dump_field(wc, c.out + "/corrugated_w.fld");
    }
  }
  std::ofstream os(c.out + "/residuals.csv");
  os << "n,corrugation_residual,spiral_residual\n";
  for (auto& r : rows) os << (long)r[0] << "," << fmt(r[1]) << "," << fmt(r[2]) << "\n";
  os.close();

  auto slope = [&](int col) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& r : rows) {
      const double x = std::log(r[0]), y = std::log(r[col]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = (double)rows.size();
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  json j;
  j["profile_residual"] = prof;
  j["corrugation_slope"] = slope(1);
  j["spiral_slope"] = slope(2);
  write_text(c.out + "/results.json", j.dump(2));
  timings["step_verify"] = t.seconds();
}

// ---------------------------------------------------------------- stage-slope

double fit_slope(const std::vector<std::pair<double, double>>& xy) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [x, y] : xy) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = (double)xy.size();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void run_stage_slope(const ExperimentConfig& c, std::map<std::string, double>& timings) {
  Timer t;
  const int d = c.d, k = c.k;
  const int ds = sym_dim(d);
  const int N = std::lcm(ds, k), S = N / ds, J = N / k;
  const double lamexp = (2.0 * J + S - 1.0) / (2.0 * S);  // lambda_N = sigma^lamexp / l
  std::vector<double> sigmas = c.sigmas.empty() ? std::vector<double>{2, 4, 8, 16} : c.sigmas;

  const double c0 = 0.93, c1 = 0.02;  // ||D|| close to 1 keeps the ladder low
  const double l_est = std::sqrt(c0 + c1);
  const long n_cap = d >= 2 ? 1280 : 1 << 20;

  struct Point {
    double sigma;
    long n;
    StageReport report;
  };
  std::vector<Point> pts;
  std::vector<std::pair<double, std::string>> skipped;
  for (double sigma : sigmas) {
    const double lam_n = std::pow(sigma, lamexp) / l_est;
    long n = c.n > 0 ? c.n : std::max<long>(64, (long)std::ceil(2.06 * lam_n));
    n = ((n + 31) / 32) * 32;
    if (n > n_cap) {
      skipped.emplace_back(sigma,
                           "guard-infeasible: needs n >= " + std::to_string(n) + " per axis");
      continue;
    }
    const long margin = (long)std::ceil(l_est * n) + 2 * N + 14;
    Domain dom(d, n, margin);
    GridField v(dom, FieldKind::vector, k);
    GridField w(dom, FieldKind::vector, d);
    GridField A = identity_times(dom, [&](double x) { return c0 + c1 * std::cos(2 * M_PI * x); });
    try {
      StageResult r = stage_corrugation(v, w, A, 1.0, sigma, {c.beta, ""});
      write_text(c.out + "/stage_report_sigma" + std::to_string((long)sigma) + ".json",
                 r.report.to_json());
      pts.push_back({sigma, n, r.report});
    } catch (const resolvability_error& e) {
      skipped.emplace_back(sigma, e.what());
    }
  }
  if (pts.size() < 2)
    throw resolvability_error("stage slope: fewer than two resolvable sigma values");
  write_text(c.out + "/frame.json", build_primitive_frame(d).to_json());

  std::vector<std::pair<double, double>> hess, defc;
  std::ofstream os(c.out + "/stage_slope.csv");
  os << "sigma,n,hess_v,deficit_out,telescope_residual\n";
  for (auto& p : pts) {
    hess.emplace_back(p.sigma, p.report.hess_v);
    defc.emplace_back(p.sigma, p.report.deficit_out);
    os << fmt(p.sigma) << "," << p.n << "," << fmt(p.report.hess_v) << ","
       << fmt(p.report.deficit_out) << "," << fmt(p.report.telescope_residual) << "\n";
  }
  os.close();

  json j;
  j["d"] = d;
  j["k"] = k;
  j["expected_hess_slope"] = double(ds) / k;
  j["hess_slope"] = fit_slope(hess);
  j["deficit_slope"] = fit_slope(defc);
  j["skipped"] = json::array();
  for (auto& [s, why] : skipped) j["skipped"].push_back({{"sigma", s}, {"reason", why}});
  write_text(c.out + "/results.json", j.dump(2));
  timings["stage_slope"] = t.seconds();
}

// ---------------------------------------------------------------- nk-run

void run_nk(const ExperimentConfig& c, std::map<std::string, double>& timings) {
  Timer t;
  const int d = c.d, k = c.k;
  const double q = d >= 2 ? 0.1 : 0.012;
  const long n = c.n > 0 ? c.n : (d >= 2 ? 128 : (1 << 18));
  const long margin = d >= 2 ? std::max<long>(n / 2, 80)
                             : (long)std::ceil(std::sqrt(1.2 * q) * n) + 600;
  Domain dom(d, n, margin);
  GridField v(dom, FieldKind::vector, k);
  if (d == 1)  // a small initial displacement so the first stage is generic
    v = sample(dom, FieldKind::vector, k,
               [&](const std::array<double, kMaxDim>& x, double* o) {
                 for (int c = 0; c < k; ++c) o[c] = 0.01 * std::sin(2 * M_PI * x[0] + c);
               });
  GridField w(dom, FieldKind::vector, d);
  GridField A = identity_times(dom, [&](double x) {
    return d >= 2 ? q : q * (1.0 + (1.0 / 6.0) * std::sin(2 * M_PI * x));
  });

  NKParams p;
  p.gamma = double(sym_dim(d)) / k;
  p.alpha = c.alpha > 0 ? c.alpha : 0.8 / (1.0 + 2.0 * p.gamma);
  p.beta = c.beta;
  p.sigma = c.sigmas.empty() ? 8.0 : c.sigmas[0];
  p.max_stages = 12;
  p.tol_deficit = 1e-3;
  NKResult r = nash_kuiper(v, w, A, p, StageKind::corrugation);

  write_trace_csv(r.trace, c.out + "/trace.csv");
  json j;
  j["outcome"] = int(r.outcome);
  j["message"] = r.message;
  j["stages"] = r.trace.size();
  j["final_deficit"] = r.final_deficit;
  if (r.trace.size() >= 2) {
    double prod = 1;
    double prev = q;
    std::vector<double> incr_ratio;
    for (size_t i = 0; i < r.trace.size(); ++i) {
      prod *= r.trace[i].deficit_sup / prev;
      prev = r.trace[i].deficit_sup;
      if (i > 0 && r.trace[i - 1].c1alpha_incr > 0)
        incr_ratio.push_back(r.trace[i].c1alpha_incr / r.trace[i - 1].c1alpha_incr);
    }
    j["mean_decay_ratio"] = std::pow(prod, 1.0 / double(r.trace.size()));
    j["c1alpha_increment_ratios"] = incr_ratio;
  }
  write_text(c.out + "/results.json", j.dump(2));
  timings["nk_run"] = t.seconds();
  if (r.outcome == NKOutcome::unresolvable) throw resolvability_error(r.message);
  if (r.outcome == NKOutcome::stagnated) throw divergence_error(r.message);
}

// ---------------------------------------------------------------- ma-roundtrip

void run_ma(const ExperimentConfig& c, std::map<std::string, double>& timings) {
  Timer t;
  const int d = c.d;
  const long n = c.n > 0 ? c.n : (d == 2 ? 128 : 24);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::vector<double> coef(40);
  for (double& x : coef) x = u(rng);

  auto poly_sym = [&](const Domain& dom) {
    GridField A = GridField::symmatrix(dom);
    for_each_point(dom, dom.margin, [&](long flat, const std::array<double, kMaxDim>& x) {
      int cidx = 0;
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
          const double x2 = d > 2 ? x[2] : 0.0;
          A.sym(i, j, flat) = coef[cidx] * x[0] * x[0] * x[1] + coef[cidx + 1] * x[1] * x[1] +
                              coef[cidx + 2] * x[0] * x[1] * x2 + coef[cidx + 3] * x[0];
          cidx += 4;
        }
    });
    return A;
  };

  auto roundtrip = [&](long nn) {
    Domain dom(d, nn, 14);
    GridField A = poly_sym(dom);
    CurvatureField F = c2_operator(A);
    GridField Arec = invert_c2(F);
    CurvatureField Frec = c2_operator(Arec);
    double m = 0;
    for (int p = 0; p < F.pair_count(); ++p)
      for (int qd = p; qd < F.pair_count(); ++qd) {
        const auto& a = F.canon(p, qd);
        const auto& b = Frec.canon(p, qd);
        for_each_index(dom, dom.margin, dom.margin + dom.n,
                       [&](long flat, const std::array<long, kMaxDim>&) {
                         m = std::max(m, std::abs(a[flat] - b[flat]));
                       });
      }
    return m;
  };
  const double e1 = roundtrip(n), e2 = roundtrip(2 * n);

  // polynomial data is quadrature-exact, so the refinement decay is measured
  // on oscillatory data instead
  auto osc_roundtrip = [&](long nn) {
    Domain dm(d, nn, 14);
    CurvatureField F(dm);
    for_each_point(dm, dm.margin, [&](long flat, const std::array<double, kMaxDim>& x) {
      F.canon(0, 0)[flat] = std::sin(2 * M_PI * x[0]) * std::cos(M_PI * x[1]);
    });
    GridField Arec = invert_c2(F, d == 2 ? 1e-4 : 1e3);
    CurvatureField Frec = c2_operator(Arec);
    double m = 0;
    for_each_index(dm, dm.margin, dm.margin + dm.n,
                   [&](long flat, const std::array<long, kMaxDim>&) {
                     m = std::max(m, std::abs(F.canon(0, 0)[flat] - Frec.canon(0, 0)[flat]));
                   });
    return m;
  };
  double osc1 = 0, osc2 = 0;
  if (d == 2) {
    osc1 = osc_roundtrip(n);
    osc2 = osc_roundtrip(2 * n);
  }

  Domain dom(d, n, 14);
  GridField wpoly = sample(dom, FieldKind::vector, d,
                           [&](const std::array<double, kMaxDim>& x, double* o) {
                             for (int i = 0; i < d; ++i)
                               o[i] = coef[i] * x[0] * x[std::min(1, d - 1)] +
                                      coef[i + 4] * x[0] * x[0] * x[0];
                           });
  std::vector<GridField> dw;
  for (int a = 0; a < d; ++a) dw.push_back(derivative(wpoly, a, 1));
  GridField sg = GridField::symmatrix(dom);
  for (int p0 = 0; p0 < d; ++p0)
    for (int q0 = p0; q0 < d; ++q0) {
      std::vector<double>& out = sg.comp(sym_index(d, p0, q0));
      for (long f = 0; f < dom.total_points(); ++f)
        out[f] = 0.5 * (dw[p0].comp(q0)[f] + dw[q0].comp(p0)[f]);
    }
  sg.set_valid(dw[0].valid());
  const double kernel_residual = c2_operator(sg).sup();

  GridField vpoly = sample(dom, FieldKind::vector, 1,
                           [&](const std::array<double, kMaxDim>& x, double* o) {
                             o[0] = coef[7] * x[0] * x[0] * x[1] + coef[8] * x[1] * x[1] +
                                    coef[9] * x[0];
                           });
  std::vector<GridField> dv;
  for (int a = 0; a < d; ++a) dv.push_back(derivative(vpoly, a, 1));
  GridField G = GridField::symmatrix(dom);
  for (int p0 = 0; p0 < d; ++p0)
    for (int q0 = p0; q0 < d; ++q0) {
      std::vector<double>& out = G.comp(sym_index(d, p0, q0));
      for (long f = 0; f < dom.total_points(); ++f)
        out[f] = dv[p0].comp(0)[f] * dv[q0].comp(0)[f];
    }
  G.set_valid(dv[0].valid());
  CurvatureField lhs = c2_operator(G);
  CurvatureField rhs = det_hessian(vpoly);
  double ident = 0;
  for (int p = 0; p < lhs.pair_count(); ++p)
    for (int qd = p; qd < lhs.pair_count(); ++qd) {
      const auto& a = lhs.canon(p, qd);
      const auto& b = rhs.canon(p, qd);
      for_each_index(dom, dom.margin, dom.margin + dom.n,
                     [&](long flat, const std::array<long, kMaxDim>&) {
                       ident = std::max(ident, std::abs(a[flat] + 2.0 * b[flat]));
                     });
    }

  std::vector<std::pair<std::string, double>> rows = {
      {"roundtrip_sup", e1},
      {"roundtrip_sup_refined", e2},
      {"kernel_residual", kernel_residual},
      {"identity_residual", ident}};
  json j;
  j["roundtrip_sup"] = e1;
  j["roundtrip_sup_refined"] = e2;
  j["kernel_residual"] = kernel_residual;
  j["identity_residual"] = ident;
  if (d == 2) {
    rows.push_back({"oscillatory_roundtrip_sup", osc1});
    rows.push_back({"oscillatory_refinement_factor", osc1 / osc2});
    j["oscillatory_roundtrip_sup"] = osc1;
    j["oscillatory_refinement_factor"] = osc1 / osc2;
  }
  write_norms_csv(c.out + "/ma_roundtrip.csv", rows);
  write_text(c.out + "/results.json", j.dump(2));
  timings["ma_roundtrip"] = t.seconds();
}

// ---------------------------------------------------------------- density-demo

void run_density(const ExperimentConfig& c, std::map<std::string, double>& timings) {
  Timer t;
  const int d = c.d, k = c.k;
  const long n = c.n > 0 ? c.n : (d >= 2 ? 128 : (1 << 15));
  const long margin = d >= 2 ? std::max<long>(64, n / 2) : n / 7;
  Domain dom(d, n, margin);
  CurvatureField F(dom);
  if (d >= 2)
    for (long f = 0; f < dom.total_points(); ++f) F.canon(0, 0)[f] = -1.0;  // curvature -1
  GridField vt(dom, FieldKind::vector, k);
  const double alpha = c.alpha > 0 ? c.alpha : 0.8 * alpha_limit(d, k, StageKind::corrugation);

  WeakMAResult r = weak_ma_solve(F, vt, c.eps, alpha);
  json j;
  j["v_dist"] = r.v_dist;
  j["vk_residual"] = r.vk_residual;
  j["c_shift"] = r.c_shift;
  j["nk_stages"] = r.flex.nk_stages;
  write_text(c.out + "/results.json", j.dump(2));
  timings["density_demo"] = t.seconds();
}

// ---------------------------------------------------------------- energy-scan

void run_energy_scan(const ExperimentConfig& c, std::map<std::string, double>& timings) {
  Timer t;
  const int d = c.d, k = c.k;
  const long n = c.n > 0 ? c.n : 96;
  const long margin = (long)std::ceil(0.93 * n) + 8;
  Domain dom(d, n, margin);
  FilmData data = exact_prestrain_pair(dom, k);

  std::vector<double> gammas = c.gammas.empty() ? std::vector<double>{0.4, 2.0, 5.0} : c.gammas;
  std::ofstream os(c.out + "/energy_scan.csv");
  os << "gamma,h,t,energy,regime,predicted_beta\n";
  json fits = json::array();
  for (double g : gammas) {
    FilmConfig cfg;
    cfg.d = d;
    cfg.k = k;
    cfg.gamma = g;
    cfg.alpha = c.alpha > 0 ? c.alpha : 0.12;
    ScanResult scan = scaling_scan(cfg, data.v, data.w, data.S);
    for (const auto& r : scan.rows)
      os << fmt(r.gamma) << "," << fmt(r.h) << "," << fmt(r.t) << "," << fmt(r.energy) << ","
         << r.regime << "," << fmt(r.predicted_beta) << "\n";
    fits.push_back({{"gamma", g},
                    {"fitted_slope", scan.fitted_slope},
                    {"fit_curvature", scan.fit_curvature},
                    {"predicted_beta", scan.predicted_beta},
                    {"regime", scan.regime}});
  }
  os.close();
  json j;
  j["fits"] = fits;
  write_text(c.out + "/results.json", j.dump(2));
  timings["energy_scan"] = t.seconds();
}

}  // namespace

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::step_verify: return "step-verify";
    case ExperimentKind::stage_slope: return "stage-slope";
    case ExperimentKind::nk_run: return "nk-run";
    case ExperimentKind::ma_roundtrip: return "ma-roundtrip";
    case ExperimentKind::density_demo: return "density-demo";
    case ExperimentKind::energy_scan: return "energy-scan";
  }
  return "step-verify";
}

ExperimentKind kind_from_name(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::step_verify, ExperimentKind::stage_slope, ExperimentKind::nk_run,
        ExperimentKind::ma_roundtrip, ExperimentKind::density_demo, ExperimentKind::energy_scan})
    if (name == kind_name(k)) return k;
  throw config_error("unknown experiment kind '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (d < 1 || d > 3) throw config_error("d must be 1, 2 or 3");
  if (n < 0) throw config_error("n must be nonnegative");
  if (eps <= 0) throw config_error("eps must be positive");
  switch (kind) {
    case ExperimentKind::stage_slope:
    case ExperimentKind::nk_run:
    case ExperimentKind::density_demo:
      if (k < 1) throw config_error("missing required field: k");
      break;
    default:
      if (k < 0) throw config_error("k must be positive");
      break;
  }
  for (double s : sigmas)
    if (s < 1) throw config_error("sigma values must be >= 1");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  c.k = 0;  // unset until a value arrives
  std::map<std::string, bool> seen;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw config_error("malformed line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (seen.count(key)) throw config_error("duplicate key '" + key + "'");
    seen[key] = true;
    if (key == "kind")
      c.kind = kind_from_name(val);
    else if (key == "d")
      c.d = (int)to_long(key, val);
    else if (key == "k")
      c.k = (int)to_long(key, val);
    else if (key == "n")
      c.n = to_long(key, val);
    else if (key == "sigma")
      c.sigmas = to_list(key, val);
    else if (key == "alpha")
      c.alpha = to_double(key, val);
    else if (key == "beta")
      c.beta = to_double(key, val);
    else if (key == "eps")
      c.eps = to_double(key, val);
    else if (key == "gamma")
      c.gamma = to_double(key, val);
    else if (key == "gammas")
      c.gammas = to_list(key, val);
    else if (key == "seed")
      c.seed = (unsigned long)to_long(key, val);
    else if (key == "out")
      c.out = val;
    else
      throw config_error("unknown key '" + key + "'");
  }
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("config file not found: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "kind = " << kind_name(c.kind) << "\n";
  os << "d = " << c.d << "\n";
  if (c.k > 0) os << "k = " << c.k << "\n";
  os << "n = " << c.n << "\n";
  if (!c.sigmas.empty()) {
    os << "sigma = ";
    for (size_t i = 0; i < c.sigmas.size(); ++i) os << (i ? "," : "") << fmt(c.sigmas[i]);
    os << "\n";
  }
  os << "alpha = " << fmt(c.alpha) << "\n";
  os << "beta = " << fmt(c.beta) << "\n";
  os << "eps = " << fmt(c.eps) << "\n";
  os << "gamma = " << fmt(c.gamma) << "\n";
  if (!c.gammas.empty()) {
    os << "gammas = ";
    for (size_t i = 0; i < c.gammas.size(); ++i) os << (i ? "," : "") << fmt(c.gammas[i]);
    os << "\n";
  }
  os << "seed = " << c.seed << "\n";
  os << "out = " << c.out << "\n";
  return os.str();
}

void run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentConfig c = config;
  if (c.k == 0) c.k = 1;
  std::filesystem::create_directories(c.out);
  std::map<std::string, double> timings;
  switch (c.kind) {
    case ExperimentKind::step_verify: run_step_verify(c, timings); break;
    case ExperimentKind::stage_slope: run_stage_slope(c, timings); break;
    case ExperimentKind::nk_run: run_nk(c, timings); break;
    case ExperimentKind::ma_roundtrip: run_ma(c, timings); break;
    case ExperimentKind::density_demo: run_density(c, timings); break;
    case ExperimentKind::energy_scan: run_energy_scan(c, timings); break;
  }
  write_manifest(c, timings);
}

}  // namespace vkci
