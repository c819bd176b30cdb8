#include "vkci/films.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vkci {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration
void gauss_legendre(int q, std::vector<double>& x, std::vector<double>& w) {
  x.assign(q, 0.0);
  w.assign(q, 0.0);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 0; j < q; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
      }
      pp = q * (z * p0 - p1) / (z * z - 1);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[q - 1 - i] = z;
    w[i] = w[q - 1 - i] = 2.0 / ((1 - z * z) * pp * pp);
  }
}

std::vector<GridField> gradient(const GridField& f) {
  std::vector<GridField> g;
  for (int a = 0; a < f.domain().dim; ++a) g.push_back(derivative(f, a, 1));
  return g;
}

}  // namespace

double FilmConfig::resolved_t() const {
  if (t > 0) return t;
  const double delta = gamma / 2;
  if (delta >= 2) return 0.05;
  return (2 - delta) / (2 * alpha + 2);
}

Deformation build_recovery(const GridField& v, const GridField& w, const Prestrain& S, double h,
                           double gamma, double t) {
  const Domain& dom = v.domain();
  const int d = dom.dim, k = v.k(), m = d + k;
  if (S.d != d || S.k != k) throw precondition_error("prestrain shape mismatch");
  const double eps = std::pow(h, t);
  if (eps < 2 * dom.h)
    throw resolvability_error("recovery smoothing scale " + std::to_string(eps) +
                              " below 2*h_grid; increase h or the grid count");
  if (mollify_consumption(dom, eps) + 4 > std::min(v.valid(), w.valid()))
    throw resolvability_error("recovery smoothing scale " + std::to_string(eps) +
                              " exceeds the pad");

  Deformation defm;
  defm.d = d;
  defm.k = k;
  defm.h = h;
  defm.delta = gamma / 2;
  defm.eps = eps;
  defm.v_eps = mollify(v, eps);
  defm.w_eps = mollify(w, eps);

  std::vector<GridField> dv = gradient(defm.v_eps);  // dv[axis].comp(c) = d_axis v^c
  std::vector<GridField> dw = gradient(defm.w_eps);
  const long total = dom.total_points();
  const double hd2 = std::pow(h, defm.delta / 2), hd = std::pow(h, defm.delta),
               hd32 = std::pow(h, 1.5 * defm.delta);

  defm.corr = GridField(dom, FieldKind::vector, m * k);
  defm.zcoef = GridField(dom, FieldKind::vector, m * k);
  for (long f = 0; f < total; ++f) {
    // grad v_eps as k x d
    Eigen::MatrixXd gv(k, d), gw(d, d);
    for (int c = 0; c < k; ++c)
      for (int a = 0; a < d; ++a) gv(c, a) = dv[a].comp(c)[f];
    for (int c = 0; c < d; ++c)
      for (int a = 0; a < d; ++a) gw(c, a) = dw[a].comp(c)[f];
    Eigen::MatrixXd Skk(k, k), Sdk(d, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) Skk(i, j) = S.at(d + i, d + j, f);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < k; ++j) Sdk(i, j) = S.at(i, d + j, f);

    Eigen::MatrixXd Btop = -gv.transpose() * Skk +
                           0.5 * gv.transpose() * gv * gv.transpose() +
                           gw.transpose() * gv.transpose();
    Eigen::MatrixXd Bbot = gv * Sdk;
    Bbot = Eigen::MatrixXd(Bbot + Bbot.transpose());  // 2 sym((grad v) S_dk)

    Eigen::MatrixXd K1 = Eigen::MatrixXd::Zero(m, k), K2(m, k), B(m, k);
    K1.topRows(d) = -gv.transpose();
    K2.topRows(d) = 2.0 * Sdk;
    K2.bottomRows(k) = Skk - 0.5 * gv * gv.transpose();
    B.topRows(d) = Btop;
    B.bottomRows(k) = Bbot;
    for (int r = 0; r < m; ++r)
      for (int b = 0; b < k; ++b) {
        defm.corr.comp(r * k + b)[f] = B(r, b);
        defm.zcoef.comp(r * k + b)[f] = hd2 * K1(r, b) + hd * K2(r, b) + hd32 * B(r, b);
      }
  }
  defm.corr.set_valid(dv[0].valid());
  defm.zcoef.set_valid(dv[0].valid());

  // x-gradient of the z-independent part: rows 0..d-1 hold h^d grad w_eps,
  // rows d.. hold h^(d/2) grad v_eps
  defm.base_grad = GridField(dom, FieldKind::vector, m * d);
  for (int r = 0; r < d; ++r)
    for (int a = 0; a < d; ++a) {
      std::vector<double>& out = defm.base_grad.comp(r * d + a);
      const std::vector<double>& src = dw[a].comp(r);
      for (long f = 0; f < total; ++f) out[f] = hd * src[f];
    }
  for (int c = 0; c < k; ++c)
    for (int a = 0; a < d; ++a) {
      std::vector<double>& out = defm.base_grad.comp((d + c) * d + a);
      const std::vector<double>& src = dv[a].comp(c);
      for (long f = 0; f < total; ++f) out[f] = hd2 * src[f];
    }
  defm.base_grad.set_valid(dv[0].valid());

  defm.zcoef_grad = GridField(dom, FieldKind::vector, m * k * d);
  long valid = defm.zcoef.valid();
  for (int a = 0; a < d; ++a) {
    GridField g = derivative(defm.zcoef, a, 1);
    valid = std::min(valid, g.valid());
    for (int r = 0; r < m; ++r)
      for (int b = 0; b < k; ++b) defm.zcoef_grad.comp((r * k + b) * d + a) = g.comp(r * k + b);
  }
  defm.zcoef_grad.set_valid(valid);
  defm.valid = std::min(valid, defm.base_grad.valid());
  return defm;
}

Eigen::MatrixXd deformation_gradient(const Deformation& defm, long flat,
                                     const Eigen::VectorXd& z) {
  const int d = defm.d, k = defm.k, m = d + k;
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(m, m);
  for (int r = 0; r < m; ++r)
    for (int a = 0; a < d; ++a) {
      double val = defm.base_grad.comp(r * d + a)[flat];
      for (int b = 0; b < k; ++b)
        val += defm.zcoef_grad.comp((r * k + b) * d + a)[flat] * z(b);
      F(r, a) += val;
    }
  for (int r = 0; r < m; ++r)
    for (int b = 0; b < k; ++b) F(r, d + b) += defm.zcoef.comp(r * k + b)[flat];
  return F;
}

double rotation_distance_sq(const Eigen::MatrixXd& F) {
  if (F.determinant() <= 0)
    throw divergence_error("deformation gradient reached the reflection branch");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(F);
  double s = 0;
  for (int i = 0; i < F.rows(); ++i) {
    const double d = svd.singularValues()(i) - 1.0;
    s += d * d;
  }
  return s;
}

double film_energy(const Deformation& defm, const Prestrain& S, double gamma, int quad_z,
                   const Eigen::MatrixXd* pre_rotation) {
  const Domain& dom = defm.v_eps.domain();
  const int d = defm.d, k = defm.k, m = d + k;
  const double hpow = std::pow(defm.h, gamma / 2);

  std::vector<double> zn, zw;
  gauss_legendre(quad_z, zn, zw);

  // tensorized z nodes over the ball |z| < h (scaled cube with indicator)
  std::vector<Eigen::VectorXd> znodes;
  std::vector<double> zweights;
  std::vector<int> idx(k, 0);
  while (true) {
    Eigen::VectorXd z(k);
    double wgt = 1;
    for (int b = 0; b < k; ++b) {
      z(b) = defm.h * zn[idx[b]];
      wgt *= defm.h * zw[idx[b]];
    }
    if (k == 1 || z.norm() < defm.h) {
      znodes.push_back(z);
      zweights.push_back(wgt);
    }
    int b = k - 1;
    while (b >= 0 && ++idx[b] == quad_z) idx[b--] = 0;
    if (b < 0) break;
  }
  double zmeasure = 0;
  for (double wgt : zweights) zmeasure += wgt;

  // x: trapezoid weights over the closed interior
  double energy = 0, xmeasure = 0;
  bool bad = false;
  for_each_index(dom, dom.margin, dom.margin + dom.n,
                 [&](long flat, const std::array<long, kMaxDim>& ix) {
                   double wx = 1;
                   for (int a = 0; a < d; ++a) {
                     const bool edge = ix[a] == dom.margin || ix[a] == dom.margin + dom.n;
                     wx *= dom.h * (edge ? 0.5 : 1.0);
                   }
                   Eigen::MatrixXd g = Eigen::MatrixXd::Identity(m, m);
                   for (int i = 0; i < m; ++i)
                     for (int j = 0; j < m; ++j) g(i, j) += 2 * hpow * S.at(i, j, flat);
                   Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
                   if (es.eigenvalues().minCoeff() <= 0) {
                     bad = true;
                     return;
                   }
                   Eigen::MatrixXd ginv_half = es.operatorInverseSqrt();

                   double cell = 0;
                   for (size_t q = 0; q < znodes.size(); ++q) {
                     Eigen::MatrixXd F = deformation_gradient(defm, flat, znodes[q]) * ginv_half;
                     if (pre_rotation) F = (*pre_rotation) * F;
                     cell += zweights[q] * rotation_distance_sq(F);
                   }
                   energy += wx * cell;
                   xmeasure += wx;
                 });
  if (bad) throw precondition_error("metric g^h lost positivity");
  return energy / (xmeasure * zmeasure);
}

PrestrainSolve solve_prestrain_vk(const Prestrain& S, double alpha, StageKind kind, double eps) {
  const Domain& dom = S.data.domain();
  const int d = S.d, k = S.k;
  GridField A = GridField::symmatrix(dom);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) A.comp(sym_index(d, i, j)) = S.data.comp(sym_index(d + k, i, j));
  A.set_valid(S.data.valid());

  PrestrainSolve out{GridField(dom, FieldKind::vector, k), GridField(dom, FieldKind::vector, d),
                     0, {}};
  if (sup_norm(S.data) == 0.0) return out;  // nothing to solve

  // identity shift, absorbed back into w below
  double C = 1.0 / 1048576.0;
  const long total = dom.total_points();
  for (; C <= 1048576.0; C *= 2) {
    GridField shifted = A;
    for (int i = 0; i < d; ++i)
      for (long f = 0; f < total; ++f) shifted.sym(i, i, f) += C;
    if (min_eigenvalue(shifted, shifted.valid()) >= 0.01) break;
  }
  GridField A_shift = A;
  for (int i = 0; i < d; ++i)
    for (long f = 0; f < total; ++f) A_shift.sym(i, i, f) += C;

  GridField v0(dom, FieldKind::vector, k), w0(dom, FieldKind::vector, d);
  FlexibilityResult flex = flexibility_solve(v0, w0, A_shift, eps, alpha, kind);
  out.v = std::move(flex.v);
  out.w = std::move(flex.w);
  subtract_linear_shift(out.w, C);
  out.report = flex.report;
  GridField R = deficit(A, out.v, out.w);
  out.exact_residual = sup_spectral(R);
  return out;
}

std::pair<int, double> scaling_regime(int d, int k, double gamma) {
  const double s = k >= d * (d + 1) ? 1.0 : double(d * (d + 1)) / k;
  if (gamma >= 4.0) return {1, 2.0 + gamma / 2.0};
  if (gamma >= 4.0 / (3.0 + s)) return {2, (4.0 + gamma * (1.0 + s)) / (2.0 + s)};
  return {3, 2.0 * gamma};
}

ScanResult scaling_scan(const FilmConfig& config, const GridField& v, const GridField& w,
                        const Prestrain& S) {
  if (config.hs.size() < 4)
    throw config_error("scaling scan needs at least 4 thickness values");
  const double t = config.resolved_t();
  ScanResult out;
  auto [regime, beta] = scaling_regime(config.d, config.k, config.gamma);
  out.regime = regime;
  out.predicted_beta = beta;

  for (double h : config.hs) {
    Deformation defm = build_recovery(v, w, S, h, config.gamma, t);
    ScanRow row;
    row.gamma = config.gamma;
    row.h = h;
    row.t = t;
    row.energy = film_energy(defm, S, config.gamma, config.quad_z);
    row.regime = regime;
    row.predicted_beta = beta;
    out.rows.push_back(row);
  }

  // least squares in log-log, linear slope plus quadratic curvature report
  const int nrows = (int)out.rows.size();
  Eigen::MatrixXd X(nrows, 3);
  Eigen::VectorXd y(nrows);
  for (int i = 0; i < nrows; ++i) {
    const double lx = std::log(out.rows[i].h);
    X(i, 0) = 1;
    X(i, 1) = lx;
    X(i, 2) = lx * lx;
    y(i) = std::log(out.rows[i].energy);
  }
  Eigen::VectorXd lin = (X.leftCols(2).transpose() * X.leftCols(2))
                            .ldlt()
                            .solve(X.leftCols(2).transpose() * y);
  Eigen::VectorXd quad = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  out.fitted_slope = lin(1);
  out.fit_curvature = quad(2);
  return out;
}

void write_scan_csv(const ScanResult& scan, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot open " + path);
  os << "gamma,h,t,energy,regime,predicted_beta\n";
  char buf[256];
  for (const auto& r : scan.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", r.gamma, r.h, r.t,
                  r.energy, r.regime, r.predicted_beta);
    os << buf;
  }
}

std::string scan_to_json(const ScanResult& scan) {
  nlohmann::json j;
  j["fitted_slope"] = scan.fitted_slope;
  j["fit_curvature"] = scan.fit_curvature;
  j["predicted_beta"] = scan.predicted_beta;
  j["regime"] = scan.regime;
  for (const auto& r : scan.rows)
    j["rows"].push_back({{"gamma", r.gamma}, {"h", r.h}, {"t", r.t}, {"energy", r.energy}});
  return j.dump(2);
}

FilmData exact_prestrain_pair(const Domain& dom, int k) {
  const int d = dom.dim, m = d + k;
  FilmData out{GridField(dom, FieldKind::vector, k), GridField(dom, FieldKind::vector, d),
               Prestrain{d, k, GridField(dom, FieldKind::vector, m * (m + 1) / 2)}};
  out.v = sample(dom, FieldKind::vector, k, [&](const std::array<double, kMaxDim>& x, double* o) {
    for (int c = 0; c < k; ++c)
      o[c] = 0.15 * std::sin(2 * M_PI * x[0] + c) + 0.1 * std::cos(2 * M_PI * x[std::min(1, d - 1)]);
  });
  out.w = sample(dom, FieldKind::vector, d, [&](const std::array<double, kMaxDim>& x, double* o) {
    for (int c = 0; c < d; ++c) o[c] = 0.05 * std::sin(2 * M_PI * x[c] + 0.3 * c);
  });
  GridField P = stretching_content(out.v, out.w);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      out.S.data.comp(sym_index(m, i, j)) = P.comp(sym_index(d, i, j));
  // smooth off-diagonal and normal blocks
  GridField extra = sample(dom, FieldKind::vector, m * (m + 1) / 2,
                           [&](const std::array<double, kMaxDim>& x, double* o) {
                             for (int c = 0; c < m * (m + 1) / 2; ++c)
                               o[c] = 0.05 * std::cos(2 * M_PI * x[0] + 0.7 * c);
                           });
  for (int i = 0; i < m; ++i)
    for (int j = std::max(i, d); j < m; ++j)
      out.S.data.comp(sym_index(m, i, j)) = extra.comp(sym_index(m, i, j));
  out.S.data.set_valid(P.valid());
  return out;
}

}  // namespace vkci
