#include "vkci/stage.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace vkci {

namespace {

const PrimitiveFrame& frame_for(int d) {
  static std::map<int, PrimitiveFrame> cache;
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, build_primitive_frame(d)).first;
  return it->second;
}

double sup_spectral_region(const GridField& S, long within) {
  const Domain& dom = S.domain();
  const int d = dom.dim;
  double m = 0;
  for_each_index(dom, dom.margin - within, dom.margin + dom.n + within,
                 [&](long flat, const std::array<long, kMaxDim>&) {
                   if (d == 1) {
                     m = std::max(m, std::abs(S.comp(0)[flat]));
                   } else if (d == 2) {
                     const double a = S.sym(0, 0, flat), b = S.sym(0, 1, flat),
                                  c = S.sym(1, 1, flat);
                     const double tr = 0.5 * (a + c);
                     const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
                     m = std::max({m, std::abs(tr + disc), std::abs(tr - disc)});
                   } else {
                     Eigen::Matrix3d M;
                     for (int i = 0; i < 3; ++i)
                       for (int j = 0; j < 3; ++j) M(i, j) = S.sym(i, j, flat);
                     Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
                     es.computeDirect(M, Eigen::EigenvaluesOnly);
                     m = std::max({m, std::abs(es.eigenvalues()(0)),
                                   std::abs(es.eigenvalues()(2))});
                   }
                 });
  return m;
}

double hess_sup(const GridField& f) {
  double m = 0;
  const Domain& dom = f.domain();
  for (int p = 0; p < dom.dim; ++p)
    for (int q = p; q < dom.dim; ++q) {
      std::array<int, kMaxDim> mu{};
      mu[p] += 1;
      mu[q] += 1;
      m = std::max(m, sup_norm(derivative(f, mu)));
    }
  return m;
}

double grad_sup(const GridField& f) {
  double m = 0;
  for (int a = 0; a < f.domain().dim; ++a) m = std::max(m, sup_norm(derivative(f, a, 1)));
  return m;
}

void check_inputs(const GridField& v, const GridField& w, const GridField& A, double M,
                  double sigma) {
  if (A.kind() != FieldKind::symmatrix) throw precondition_error("A must be a symmatrix field");
  if (sigma < 1.0) throw precondition_error("stage needs sigma >= 1");
  const double m_needed = std::max({cm_norm(v, 2), cm_norm(w, 2), 1.0});
  if (M < m_needed * (1 - 1e-9))
    throw precondition_error("stage needs M >= max(||v||_2, ||w||_2, 1) = " +
                             std::to_string(m_needed));
}

// amplitude fields a_i = sqrt(coeff_i(C Id + D(x))), valid where D is
std::vector<GridField> amplitude_fields(const PrimitiveFrame& fr, double C, const GridField& D,
                                        const char* who) {
  const Domain& dom = D.domain();
  const int d = dom.dim;
  const int ds = fr.dstar();
  std::vector<GridField> a(ds, GridField::scalar(dom));
  for (auto& f : a) f.set_valid(D.valid());
  const double floor_ok = -1e-12 * std::max(C, 1.0);
  bool bad = false;
  // packed coefficient action, no per-point allocation
  std::vector<int> diag_slot(d);
  for (int i = 0; i < d; ++i) diag_slot[i] = sym_index(d, i, i);
  std::vector<double> packed(ds);
  for_each_index(dom, dom.margin - D.valid(), dom.margin + dom.n + D.valid(),
                 [&](long flat, const std::array<long, kMaxDim>&) {
                   for (int s = 0; s < ds; ++s) packed[s] = D.comp(s)[flat];
                   for (int i = 0; i < d; ++i) packed[diag_slot[i]] += C;
                   for (int i = 0; i < ds; ++i) {
                     double c = 0;
                     for (int s = 0; s < ds; ++s) c += fr.coeff(i, s) * packed[s];
                     if (c < floor_ok) bad = true;
                     a[i].comp(0)[flat] = std::sqrt(std::max(c, 0.0));
                   }
                 });
  if (bad)
    throw divergence_error(std::string("primitive decomposition lost positivity in ") + who);
  return a;
}

}  // namespace

FrequencyLadder frequency_ladder(int d_star, int k, double sigma, double l) {
  if (sigma < 1.0) throw precondition_error("frequency ladder needs sigma >= 1");
  if (!(l > 0.0 && l <= 1.0)) throw precondition_error("frequency ladder needs l in (0,1]");
  FrequencyLadder lad;
  lad.d_star = d_star;
  lad.k = k;
  lad.N = std::lcm(d_star, k);
  lad.S = lad.N / d_star;
  lad.J = lad.N / k;
  lad.sigma = sigma;
  lad.l = l;
  const double ll = std::pow(sigma, 1.0 / lad.S);  // lambda * l
  lad.lambda_base = ll / l;
  int te = 2;
  for (int i = 1; i <= lad.N; ++i) {
    if (i > 1) {
      if ((i - 1) % k == 0)
        te += 2;  // k-branch takes precedence when both divide
      else if ((i - 1) % d_star == 0)
        te += 1;
    }
    // ladder invariant: te == 2(1 + j) + s for the block indices of i
    const int j = (i - 1) / k, s = (i - 1) / d_star;
    if (te != 2 + 2 * j + s)
      throw config_error("frequency ladder exponent bookkeeping violated at i=" +
                         std::to_string(i));
    lad.twice_exponent.push_back(te);
    lad.lambdas.push_back(std::pow(ll, 0.5 * te) / l);
    if (i > 1 && lad.lambdas[i - 1] < lad.lambdas[i - 2] * (1 - 1e-12))
      throw config_error("frequency ladder must be non-decreasing");
  }
  return lad;
}

std::string StageReport::to_json() const {
  nlohmann::json j;
  j["N"] = N;
  j["S"] = S;
  j["J"] = J;
  j["sigma"] = sigma;
  j["M"] = M;
  j["l"] = l;
  j["lambda_max"] = lambda_max;
  j["deficit_in"] = deficit_in;
  j["deficit_out"] = deficit_out;
  j["dv_c1"] = dv_c1;
  j["dw_c1"] = dw_c1;
  j["hess_v"] = hess_v;
  j["hess_w"] = hess_w;
  j["c_incr_v"] = c_incr_v;
  j["c_incr_w"] = c_incr_w;
  j["c_hess_v"] = c_hess_v;
  j["c_deficit"] = c_deficit;
  j["telescope_residual"] = telescope_residual;
  j["ctilde"] = ctilde;
  j["deficit_s"] = deficit_s;
  j["amp_sup"] = amp_sup;
  j["err_diff"] = err_diff;
  return j.dump(2);
}

long stage_pad_requirement(int d, int k, double deficit_sup, double M, const Domain& dom) {
  const int N = std::lcm(sym_dim(d), k);
  const double l = std::sqrt(deficit_sup) / M;
  const long moll = l < 2 * dom.h ? 0 : mollify_consumption(dom, l);
  return moll + 2 * N + 10;
}

StageResult stage_corrugation(const GridField& v, const GridField& w, const GridField& A,
                              double M, double sigma, const StageOptions& opts) {
  check_inputs(v, w, A, M, sigma);
  const Domain& dom = v.domain();
  const int d = dom.dim, k = v.k();
  const PrimitiveFrame& fr = frame_for(d);
  const int ds = fr.dstar();

  double normD = 0;
  {
    GridField D_in = deficit(A, v, w);
    normD = sup_spectral(D_in);
  }
  if (!(normD > 0.0))
    throw precondition_error("stage needs a nonzero deficit");
  if (normD > 1.0 + 1e-12)
    throw precondition_error("stage needs ||D||_0 <= 1, got " + std::to_string(normD));

  const double l = std::sqrt(normD) / M;
  FrequencyLadder lad = frequency_ladder(ds, k, sigma, std::min(l, 1.0));
  if (lad.lambdas.back() * dom.h > 0.5 + 1e-12)
    throw resolvability_error(
        "stage ladder unresolvable: lambda_N*h = " +
        std::to_string(lad.lambdas.back() * dom.h) +
        " > 0.5; increase the grid count or reduce sigma");

  // mollification; scales below the grid collapse to the identity
  GridField v0 = v, w0 = w, A0 = A;
  if (l >= 2 * dom.h) {
    if (mollify_consumption(dom, l) + 2 * lad.N + 10 > std::min({v.valid(), w.valid(), A.valid()}))
      throw resolvability_error("stage pad too small for mollification radius " +
                                std::to_string(l));
    v0 = mollify(v, l);
    w0 = mollify(w, l);
    A0 = mollify(A, l);
  }
  GridField D0 = deficit(A0, v0, w0);

  GridField vcur = v0, wcur = w0;
  GridField P_prev = stretching_content(v0, w0);
  GridField Ds = D0;
  const double ll = std::pow(sigma, 1.0 / lad.S);

  StageReport rep;
  rep.N = lad.N;
  rep.S = lad.S;
  rep.J = lad.J;
  rep.sigma = sigma;
  rep.M = M;
  rep.l = l;
  rep.lambda_max = lad.lambdas.back();
  rep.deficit_in = normD;
  rep.grad_v_in = grad_sup(v);

  double sumC = 0;
  for (int s = 0; s < lad.S; ++s) {
    const double Ds_sup = sup_spectral_region(Ds, Ds.valid());
    const double Ct = (2.0 / fr.r0) * (std::pow(ll, -s) * normD + Ds_sup);
    rep.ctilde.push_back(Ct);
    rep.deficit_s.push_back(sup_spectral(Ds));
    std::vector<GridField> amps =
        amplitude_fields(fr, Ct, Ds, ("sub-stage " + std::to_string(s)).c_str());

    GridField Vacc(dom, FieldKind::symmatrix, d);
    long vacc_valid = Ds.valid();
    for (int delta = 0; delta < ds; ++delta) {
      const int i = s * ds + delta + 1;           // global step counter 1..N
      const int gammac = (i - 1) % k;             // codimension axis
      Eigen::VectorXd E = Eigen::VectorXd::Zero(k);
      E(gammac) = 1.0;
      StepSpec spec{amps[delta], fr.etas[delta], E, lad.lambdas[i - 1]};
      rep.amp_sup.push_back(sup_norm(amps[delta]));

      auto [vn, wn] = corrugation_step(vcur, wcur, spec);
      GridField P_next = stretching_content(vn, wn);
      // accumulate V_i - a^2 eta eta^T
      vacc_valid = std::min(vacc_valid, P_next.valid());
      const double* a = amps[delta].comp(0).data();
      for_each_index(dom, dom.margin - vacc_valid, dom.margin + dom.n + vacc_valid,
                     [&](long flat, const std::array<long, kMaxDim>&) {
                       for (int p = 0; p < d; ++p)
                         for (int q = p; q < d; ++q)
                           Vacc.sym(p, q, flat) += P_next.sym(p, q, flat) -
                                                   P_prev.sym(p, q, flat) -
                                                   a[flat] * a[flat] * fr.etas[delta](p) *
                                                       fr.etas[delta](q);
                     });
      vcur = std::move(vn);
      wcur = std::move(wn);
      P_prev = std::move(P_next);
      if (!opts.dump_dir.empty()) {
        dump_field(vcur, opts.dump_dir + "/v_" + std::to_string(i) + ".fld");
        dump_field(wcur, opts.dump_dir + "/w_" + std::to_string(i) + ".fld");
      }
    }
    Vacc.set_valid(vacc_valid);
    Vacc *= -1.0;
    Ds = std::move(Vacc);
    sumC += Ct;
  }
  rep.deficit_s.push_back(sup_spectral(Ds));

  GridField w_out = wcur;
  subtract_linear_shift(w_out, sumC);
  GridField Dt = deficit(A, vcur, w_out);
  rep.deficit_out = sup_spectral(Dt);

  // exact reconstruction: Dt = (A - A0) + D_S up to roundoff
  {
    GridField T = Dt;
    T -= A;
    T += A0;
    T -= Ds;
    rep.telescope_residual = sup_norm(T);
  }

  rep.dv_c1 = [&] {
    GridField dv = vcur;
    dv -= v;
    return cm_norm(dv, 1);
  }();
  rep.dw_c1 = [&] {
    GridField dw = w_out;
    dw -= w;
    return cm_norm(dw, 1);
  }();
  rep.hess_v = 0;
  rep.hess_w = 0;
  for (int c = 0; c < k; ++c) {
    GridField f = GridField::scalar(dom);
    f.comp(0) = vcur.comp(c);
    f.set_valid(vcur.valid());
    rep.hess_v = std::max(rep.hess_v, hess_sup(f));
  }
  for (int c = 0; c < d; ++c) {
    GridField f = GridField::scalar(dom);
    f.comp(0) = w_out.comp(c);
    f.set_valid(w_out.valid());
    rep.hess_w = std::max(rep.hess_w, hess_sup(f));
  }
  rep.c_incr_v = rep.dv_c1 / std::sqrt(normD);
  rep.c_incr_w = rep.dw_c1 / (std::sqrt(normD) * (1 + rep.grad_v_in));
  rep.c_hess_v = rep.hess_v / (M * std::pow(sigma, double(ds) / k));
  const double holdA = holder_norm(A, 0, opts.beta).value;
  rep.c_deficit =
      rep.deficit_out /
      (holdA * std::pow(M, -opts.beta) * std::pow(normD, opts.beta / 2) + normD / sigma);

  return {std::move(vcur), std::move(w_out), std::move(rep)};
}

StageResult stage_kallen(const GridField& v, const GridField& w, const GridField& A, double M,
                         double sigma, double delta, int n_iters, const StageOptions& opts) {
  check_inputs(v, w, A, M, sigma);
  const Domain& dom = v.domain();
  const int d = dom.dim, k = v.k();
  const PrimitiveFrame& fr = frame_for(d);
  const int ds = fr.dstar();
  if (k < 2 * ds)
    throw precondition_error("Kallen stage needs k >= 2 d* = " + std::to_string(2 * ds));
  if (delta <= 0) throw precondition_error("Kallen stage needs delta > 0");
  const int N = n_iters > 0 ? n_iters : (int)std::ceil(1.0 / delta);

  double normD = 0;
  {
    GridField D_in = deficit(A, v, w);
    normD = sup_spectral(D_in);
  }
  if (!(normD > 0.0)) throw precondition_error("stage needs a nonzero deficit");
  if (normD > 1.0 + 1e-12)
    throw precondition_error("stage needs ||D||_0 <= 1, got " + std::to_string(normD));

  const double l = std::min(std::sqrt(normD) / M, 1.0);
  const double lambda = std::pow(sigma, 1.0 / N) / l;
  if (lambda * dom.h > 0.5 + 1e-12)
    throw resolvability_error("Kallen frequency unresolvable: lambda*h = " +
                              std::to_string(lambda * dom.h) +
                              "; increase the grid count or reduce sigma");

  GridField v0 = v, w0 = w, A0 = A;
  if (l >= 2 * dom.h) {
    if (mollify_consumption(dom, l) + 2 * N + 10 > std::min({v.valid(), w.valid(), A.valid()}))
      throw resolvability_error("stage pad too small for mollification radius " +
                                std::to_string(l));
    v0 = mollify(v, l);
    w0 = mollify(w, l);
    A0 = mollify(A, l);
  }
  GridField D0 = deficit(A0, v0, w0);
  const double Ct = (2.0 / fr.r0) * (normD + sup_spectral_region(D0, D0.valid()));

  // component Hessians of the mollified v (the error fields linearize here)
  std::vector<GridField> hess;
  for (int c = 0; c < 2 * ds; ++c) {
    GridField f = GridField::scalar(dom);
    f.comp(0) = v0.comp(c);
    f.set_valid(v0.valid());
    GridField H = GridField::symmatrix(dom);
    long hvalid = f.valid();
    for (int p = 0; p < d; ++p)
      for (int q = p; q < d; ++q) {
        std::array<int, kMaxDim> mu{};
        mu[p] += 1;
        mu[q] += 1;
        GridField d2 = derivative(f, mu);
        hvalid = std::min(hvalid, d2.valid());
        H.comp(sym_index(d, p, q)) = std::move(d2.comp(0));
      }
    H.set_valid(hvalid);
    hess.push_back(std::move(H));
  }

  StageReport rep;
  rep.N = N;
  rep.sigma = sigma;
  rep.M = M;
  rep.l = l;
  rep.lambda_max = lambda;
  rep.deficit_in = normD;
  rep.grad_v_in = grad_sup(v);
  rep.ctilde.push_back(Ct);

  GridField E_prev(dom, FieldKind::symmatrix, d);   // E_0 = 0
  E_prev.set_valid(D0.valid());
  GridField E_last_diff(dom, FieldKind::symmatrix, d);
  std::vector<GridField> amps;
  for (int r = 1; r <= N; ++r) {
    const double e_sup = sup_spectral_region(E_prev, E_prev.valid());
    if (e_sup > fr.r0 * Ct / 2)
      throw divergence_error("sigma below sigma0 for this data: ||E_" + std::to_string(r - 1) +
                             "||_0 = " + std::to_string(e_sup) + " exceeds r0*C/2 = " +
                             std::to_string(fr.r0 * Ct / 2));
    // X = C Id + D0 - E_{r-1}; amplitudes a_i = sqrt(2 coeff_i(X))
    GridField X = D0;
    X -= E_prev;
    std::vector<GridField> a =
        amplitude_fields(fr, Ct, X, ("Kallen iteration " + std::to_string(r)).c_str());
    for (auto& f : a) {
      double* p = f.comp(0).data();
      for (long i = 0; i < dom.total_points(); ++i) p[i] *= std::sqrt(2.0);
    }
    GridField E_r = multi_spiral_error(a, fr.etas, lambda, hess);
    GridField diff = E_r;
    diff -= E_prev;
    rep.err_diff.push_back(sup_spectral(diff));
    E_last_diff = std::move(diff);
    E_prev = std::move(E_r);
    amps = std::move(a);
  }

  auto [v1, w1] = multi_spiral_step(v0, w0, amps, fr.etas, lambda);
  GridField w_out = std::move(w1);
  subtract_linear_shift(w_out, Ct);
  GridField Dt = deficit(A, v1, w_out);
  rep.deficit_out = sup_spectral(Dt);
  for (int i = 0; i < (int)amps.size(); ++i) rep.amp_sup.push_back(sup_norm(amps[i]));

  // reconstruction diagnostic: Dt - (A - A0) + (E_N - E_{N-1}), zero up to
  // the spiral discretization residual
  {
    GridField T = Dt;
    T -= A;
    T += A0;
    T += E_last_diff;
    rep.telescope_residual = sup_norm(T);
  }

  rep.dv_c1 = [&] {
    GridField dv = v1;
    dv -= v;
    return cm_norm(dv, 1);
  }();
  rep.dw_c1 = [&] {
    GridField dw = w_out;
    dw -= w;
    return cm_norm(dw, 1);
  }();
  for (int c = 0; c < k; ++c) {
    GridField f = GridField::scalar(dom);
    f.comp(0) = v1.comp(c);
    f.set_valid(v1.valid());
    rep.hess_v = std::max(rep.hess_v, hess_sup(f));
  }
  for (int c = 0; c < d; ++c) {
    GridField f = GridField::scalar(dom);
    f.comp(0) = w_out.comp(c);
    f.set_valid(w_out.valid());
    rep.hess_w = std::max(rep.hess_w, hess_sup(f));
  }
  rep.c_incr_v = rep.dv_c1 / std::sqrt(normD);
  rep.c_incr_w = rep.dw_c1 / (std::sqrt(normD) * (1 + rep.grad_v_in));
  rep.c_hess_v = rep.hess_v / (M * std::pow(sigma, delta));
  const double holdA = holder_norm(A, 0, opts.beta).value;
  rep.c_deficit =
      rep.deficit_out /
      (holdA * std::pow(M, -opts.beta) * std::pow(normD, opts.beta / 2) + normD / sigma);

  return {std::move(v1), std::move(w_out), std::move(rep)};
}

double kallen_sigma0(const GridField& v, const GridField& w, const GridField& A, double M,
                     double delta, double sigma_start) {
  double sigma = std::max(sigma_start, 1.0);
  for (int i = 0; i < 24; ++i) {
    try {
      stage_kallen(v, w, A, M, sigma, delta);
      return sigma;
    } catch (const divergence_error&) {
      sigma *= 2;
    }
  }
  throw config_error("kallen_sigma0: no admissible sigma below 2^24");
}

}  // namespace vkci
