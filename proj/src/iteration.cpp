#include "vkci/iteration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vkci {

namespace {

double c1alpha_increment(const GridField& a, const GridField& b, double alpha) {
  GridField d = a;
  d -= b;
  return holder_norm(d, 1, alpha).value;
}

GridField scalar_component(const GridField& v, int c) {
  GridField f = GridField::scalar(v.domain());
  f.comp(0) = v.comp(c);
  f.set_valid(v.valid());
  return f;
}

GridField hessian_of_scalar(const GridField& f) {
  const Domain& dom = f.domain();
  GridField H = GridField::symmatrix(dom);
  long valid = f.valid();
  for (int p = 0; p < dom.dim; ++p)
    for (int q = p; q < dom.dim; ++q) {
      std::array<int, kMaxDim> mu{};
      mu[p] += 1;
      mu[q] += 1;
      GridField d2 = derivative(f, mu);
      valid = std::min(valid, d2.valid());
      H.comp(sym_index(dom.dim, p, q)) = std::move(d2.comp(0));
    }
  H.set_valid(valid);
  return H;
}

}  // namespace

double alpha_limit(int d, int k, StageKind kind) {
  if (kind == StageKind::kallen) return 1.0;
  return 1.0 / (1.0 + double(d * (d + 1)) / k);
}

void NKParams::validate() const {
  if (sigma <= 1.0) throw config_error("nash_kuiper needs sigma > 1");
  if (!(beta > 0 && beta <= 1)) throw config_error("beta must lie in (0,1]");
  const double a_hi = std::min(beta / 2, 1.0 / (1.0 + 2.0 * gamma));
  if (!(alpha > 0 && alpha < a_hi))
    throw config_error("alpha must lie in (0, " + std::to_string(a_hi) +
                       ") = (0, min(beta/2, 1/(1+2*gamma)))");
  const double lo = 2 * gamma * alpha / (1 - alpha);
  const double hi = std::min(1.0, 2 * gamma * beta / (2 - beta));
  if (delta_exp != 0.0 && !(delta_exp > lo && delta_exp < hi))
    throw config_error("delta_exp outside (" + std::to_string(lo) + ", " + std::to_string(hi) +
                       ")");
}

double NKParams::resolved_delta() const {
  if (delta_exp != 0.0) return delta_exp;
  const double lo = 2 * gamma * alpha / (1 - alpha);
  const double hi = std::min(1.0, 2 * gamma * beta / (2 - beta));
  return 0.5 * (lo + hi);
}

void write_trace_csv(const std::vector<NKTraceRow>& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot open " + path);
  os << "stage,deficit_sup,c1_incr,c1alpha_incr,hess_v,hess_w,M,sigma\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.stage,
                  r.deficit_sup, r.c1_incr, r.c1alpha_incr, r.hess_v, r.hess_w, r.M, r.sigma);
    os << buf;
  }
}

NKResult nash_kuiper(const GridField& v, const GridField& w, const GridField& A,
                     const NKParams& params, StageKind kind) {
  params.validate();
  GridField D = deficit(A, v, w);
  const double nd0 = sup_spectral(D);
  if (nd0 > 1.0 + 1e-12)
    throw precondition_error("nash_kuiper needs ||D||_0 <= 1, got " + std::to_string(nd0));

  NKResult res{v, w, {}, NKOutcome::converged, "", nd0};
  if (nd0 <= params.tol_deficit) return res;  // nothing to do

  GridField vcur = v, wcur = w;
  double prev_deficit = nd0;
  int flat_stages = 0;
  for (int i = 1; i <= params.max_stages; ++i) {
    const double M = std::max({cm_norm(vcur, 2), cm_norm(wcur, 2), 1.0});
    StageResult st;
    try {
      if (kind == StageKind::corrugation)
        st = stage_corrugation(vcur, wcur, A, M, params.sigma);
      else
        st = stage_kallen(vcur, wcur, A, M, params.sigma, params.gamma);
    } catch (const resolvability_error& e) {
      res.outcome = NKOutcome::unresolvable;
      res.message = e.what();
      res.v = std::move(vcur);
      res.w = std::move(wcur);
      res.final_deficit = prev_deficit;
      return res;
    } catch (const divergence_error& e) {
      res.outcome = NKOutcome::stagnated;
      res.message = e.what();
      res.v = std::move(vcur);
      res.w = std::move(wcur);
      res.final_deficit = prev_deficit;
      return res;
    }

    NKTraceRow row;
    row.stage = i;
    row.deficit_sup = st.report.deficit_out;
    row.c1_incr = std::max(st.report.dv_c1, st.report.dw_c1);
    row.c1alpha_incr = std::max(c1alpha_increment(st.v, vcur, params.alpha),
                                c1alpha_increment(st.w, wcur, params.alpha));
    row.hess_v = st.report.hess_v;
    row.hess_w = st.report.hess_w;
    row.M = M;
    row.sigma = params.sigma;
    res.trace.push_back(row);

    vcur = std::move(st.v);
    wcur = std::move(st.w);

    if (row.deficit_sup <= params.tol_deficit) {
      res.v = std::move(vcur);
      res.w = std::move(wcur);
      res.outcome = NKOutcome::converged;
      res.final_deficit = row.deficit_sup;
      return res;
    }
    flat_stages = row.deficit_sup >= 0.95 * prev_deficit ? flat_stages + 1 : 0;
    if (flat_stages >= 3) {
      res.v = std::move(vcur);
      res.w = std::move(wcur);
      res.outcome = NKOutcome::stagnated;
      res.message = "deficit stagnated (ratio >= 0.95 across 3 stages)";
      res.final_deficit = row.deficit_sup;
      return res;
    }
    prev_deficit = row.deficit_sup;
  }
  res.v = std::move(vcur);
  res.w = std::move(wcur);
  res.outcome = NKOutcome::max_stages;
  res.message = "stage budget exhausted";
  res.final_deficit = prev_deficit;
  return res;
}

C1ReduceResult c1_reduce_deficit(const GridField& v, const GridField& w, const GridField& A,
                                 double eps) {
  if (eps <= 0) throw config_error("c1_reduce_deficit needs eps > 0");
  const Domain& dom = v.domain();
  GridField D = deficit(A, v, w);
  std::array<double, kMaxDim> where{};
  const double c = min_eigenvalue(D, D.valid(), &where);
  if (c <= 0) {
    std::ostringstream os;
    os << "deficit not positive definite: min eigenvalue " << c << " at (";
    for (int a = 0; a < dom.dim; ++a) os << (a ? "," : "") << where[a];
    os << ")";
    throw precondition_error(os.str());
  }
  const double nd = sup_spectral(D);
  const double delta = std::min(0.5, eps / (2 * nd));

  PositiveDecomposition dec = decompose_positive_field(D, c * (1 - 1e-9));
  std::vector<int> active;
  for (size_t i = 0; i < dec.b.size(); ++i)
    if (sup_norm(dec.b[i]) > 1e-14) active.push_back((int)i);
  const int N = (int)active.size();
  const double tau = eps * delta * c / (4.0 * std::max(N, 1));

  Eigen::VectorXd E = Eigen::VectorXd::Zero(v.k());
  E(0) = 1.0;
  GridField vcur = v, wcur = w;
  const double amp_scale = std::sqrt(1.0 - delta);
  int steps = 0;
  for (int idx : active) {
    GridField a = dec.b[idx];
    a *= amp_scale;
    // measured sups of the step error terms and the C0 increments
    GridField Hg = hessian_of_scalar(scalar_component(vcur, 0));
    GridField Ha = hessian_of_scalar(a);
    double S_ahg = 0, S_da2 = 0, S_aha = 0, S_adg = 0, S_ada = 0;
    const double S_a = sup_norm(a);
    {
      std::vector<GridField> dg, da;
      for (int ax = 0; ax < dom.dim; ++ax) {
        dg.push_back(derivative(scalar_component(vcur, 0), ax, 1));
        da.push_back(derivative(a, ax, 1));
      }
      for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
        const double av = std::abs(a.comp(0)[flat]);
        double hg = 0, ha = 0, da2 = 0, dg2 = 0;
        for (int p = 0; p < dom.dim; ++p) {
          da2 += da[p].comp(0)[flat] * da[p].comp(0)[flat];
          dg2 += dg[p].comp(0)[flat] * dg[p].comp(0)[flat];
          for (int q = p; q < dom.dim; ++q) {
            hg = std::max(hg, std::abs(Hg.sym(p, q, flat)));
            ha = std::max(ha, std::abs(Ha.sym(p, q, flat)));
          }
        }
        S_ahg = std::max(S_ahg, av * hg);
        S_aha = std::max(S_aha, av * ha);
        S_da2 = std::max(S_da2, da2);
        S_adg = std::max(S_adg, av * std::sqrt(dg2));
        S_ada = std::max(S_ada, av * std::sqrt(da2));
      });
    }
    // geometric search for the smallest frequency meeting the error and C0
    // budgets; the stencil symbol error grows like (lambda h)^4, so the
    // admissible lambdas form a window that may be empty on a coarse grid
    const double disc_budget = std::min(eps, delta * c) / (4.0 * std::max(N, 1));
    double lambda = 2 * M_PI;
    auto ok = [&](double l) {
      const double err = 2 * S_ahg / l + 1.5 * S_da2 / (l * l) + 0.5 * S_aha / (l * l);
      const double dv0 = 2 * S_a / l;
      const double dw0 = 2 * S_adg / l + 0.5 * S_ada / (l * l) + S_a * S_a / l;
      const double th = l * dom.h;
      const double disc = 1.4 * S_a * S_a * th * th * th * th;
      return err <= tau && dv0 <= eps / (2 * N) && dw0 <= eps / (2 * N) && disc <= disc_budget;
    };
    while (!ok(lambda)) {
      lambda *= 1.18920711500272103;  // 2^(1/4)
      if (lambda * dom.h > 0.5)
        throw resolvability_error(
            "grid too coarse for requested eps: corrugation " + std::to_string(steps + 1) +
            " needs lambda = " + std::to_string(lambda) + " beyond 0.5/h");
    }
    StepSpec spec{a, dec.etas[idx], E, lambda};
    auto [vn, wn] = corrugation_step(vcur, wcur, spec);
    vcur = std::move(vn);
    wcur = std::move(wn);
    ++steps;
  }

  C1ReduceResult out{std::move(vcur), std::move(wcur), 0, 0, steps};
  GridField Dt = deficit(A, out.v, out.w);
  out.deficit_out = sup_spectral(Dt);
  out.min_eig_out = min_eigenvalue(Dt, 0);
  if (out.deficit_out > eps)
    throw divergence_error("deficit reduction missed its budget: " +
                           std::to_string(out.deficit_out) + " > " + std::to_string(eps));
  if (out.min_eig_out < 0.5 * delta * c * (1 - 1e-6))
    throw divergence_error("deficit reduction lost uniform positivity");
  return out;
}

FlexibilityResult flexibility_solve(const GridField& v, const GridField& w, const GridField& A,
                                    double eps, double alpha, StageKind kind,
                                    const NKParams* base_params) {
  const Domain& dom = v.domain();
  const int d = dom.dim, k = v.k();
  const double a_hi = alpha_limit(d, k, kind);
  const double beta = base_params ? base_params->beta : 1.0;
  if (!(alpha > 0 && alpha < std::min(beta / 2, a_hi)))
    throw config_error("alpha outside the admissible range (0, min(beta/2, 1/(1+d(d+1)/k) = " +
                       std::to_string(a_hi) + "))");
  if (eps <= 0) throw config_error("flexibility_solve needs eps > 0");
  const double eps3 = eps * eps * eps;

  // phase 1: smooth the data within eps^3 in C1
  GridField v1 = v, w1 = w, A1 = A;
  for (double l = 0.25; l >= 2 * dom.h; l /= 2) {
    if (mollify_consumption(dom, l) + 8 > std::min({v.valid(), w.valid(), A.valid()})) continue;
    GridField vm = mollify(v, l), wm = mollify(w, l), Am = mollify(A, l);
    GridField dv = vm;
    dv -= v;
    GridField dw = wm;
    dw -= w;
    GridField dA = Am;
    dA -= A;
    const double gap = std::max({cm_norm(dv, 1), cm_norm(dw, 1), sup_norm(dA)});
    if (gap <= eps3) {
      v1 = std::move(vm);
      w1 = std::move(wm);
      A1 = std::move(Am);
      break;
    }
  }
  {
    GridField D1 = deficit(A1, v1, w1);
    if (min_eigenvalue(D1, D1.valid()) <= 0)
      throw precondition_error("smoothed deficit lost positivity; reduce eps");
  }

  // phase 2: C1 deficit reduction to eps^3
  C1ReduceResult red = c1_reduce_deficit(v1, w1, A1, eps3);
  GridField v2 = std::move(red.v), w2 = std::move(red.w);

  // phase 3: hand the residual (against the original A) to the outer loop
  FlexibilityResult out{v2, w2, {}};
  GridField D3 = deficit(A, v2, w2);
  const double nd3 = sup_spectral(D3);
  NKParams params;
  if (base_params) params = *base_params;
  params.alpha = alpha;
  params.beta = beta;
  params.gamma = kind == StageKind::corrugation ? double(sym_dim(d)) / k
                                                : (base_params ? base_params->gamma : 0.25);
  if (nd3 > 1e-12 && nd3 > params.tol_deficit) {
    NKResult nk = nash_kuiper(v2, w2, A, params, kind);
    out.v = std::move(nk.v);
    out.w = std::move(nk.w);
    out.report.nk_stages = (int)nk.trace.size();
    out.report.outcome = nk.outcome;
    out.report.message = nk.message;
  }
  GridField dv = out.v;
  dv -= v;
  GridField dw = out.w;
  dw -= w;
  out.report.dv_sup = sup_norm(dv);
  out.report.dw_sup = sup_norm(dw);
  out.report.vk_residual = sup_spectral(deficit(A, out.v, out.w));
  return out;
}

}  // namespace vkci
