#include "vkci/step.hpp"

#include <sstream>

namespace vkci {

namespace {

void check_unit(const Eigen::VectorXd& v, const char* name) {
  if (std::abs(v.norm() - 1.0) > 1e-10)
    throw precondition_error(std::string(name) + " must be a unit vector");
}

GridField scalar_projection(const GridField& v, const Eigen::VectorXd& E) {
  // <v, E> as a scalar field
  GridField g = GridField::scalar(v.domain());
  g.set_valid(v.valid());
  const long np = v.domain().total_points();
  for (int c = 0; c < v.k(); ++c) {
    if (E(c) == 0.0) continue;
    const double* src = v.comp(c).data();
    double* dst = g.comp(0).data();
    for (long i = 0; i < np; ++i) dst[i] += E(c) * src[i];
  }
  return g;
}

std::vector<GridField> gradient(const GridField& f) {
  std::vector<GridField> g;
  for (int a = 0; a < f.domain().dim; ++a) g.push_back(derivative(f, a, 1));
  return g;
}

GridField hessian_sym(const GridField& f) {
  // second derivatives of a scalar field as a symmatrix field
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

void shape_check(const GridField& v, const GridField& w) {
  if (v.kind() != FieldKind::vector) throw precondition_error("v must be a vector field");
  if (w.kind() != FieldKind::vector || w.k() != w.domain().dim)
    throw precondition_error("w must be a d-vector field");
  if (!(v.domain() == w.domain())) throw precondition_error("v, w domain mismatch");
}

}  // namespace

GridField stretching_content(const GridField& v, const GridField& w) {
  shape_check(v, w);
  const Domain& dom = v.domain();
  const int d = dom.dim;
  if (std::min(v.valid(), w.valid()) < 2)
    throw resolvability_error("stretching_content: pad exhausted");
  GridField P = GridField::symmatrix(dom);
  const long np = dom.total_points();

  std::vector<GridField> dv = gradient(v);
  for (int c = 0; c < v.k(); ++c)
    for (int p = 0; p < d; ++p)
      for (int q = p; q < d; ++q) {
        double* dst = P.comp(sym_index(d, p, q)).data();
        const double* gp = dv[p].comp(c).data();
        const double* gq = dv[q].comp(c).data();
        for (long i = 0; i < np; ++i) dst[i] += 0.5 * gp[i] * gq[i];
      }
  std::vector<GridField> dw = gradient(w);
  for (int p = 0; p < d; ++p)
    for (int q = p; q < d; ++q) {
      double* dst = P.comp(sym_index(d, p, q)).data();
      const double* dpwq = dw[p].comp(q).data();
      const double* dqwp = dw[q].comp(p).data();
      for (long i = 0; i < np; ++i) dst[i] += 0.5 * (dpwq[i] + dqwp[i]);
    }
  P.set_valid(std::min(dv[0].valid(), dw[0].valid()));
  return P;
}

GridField deficit(const GridField& A, const GridField& v, const GridField& w) {
  if (A.kind() != FieldKind::symmatrix) throw precondition_error("A must be a symmatrix field");
  GridField D = stretching_content(v, w);
  D *= -1.0;
  D += A;
  return D;
}

std::pair<GridField, GridField> corrugation_step(const GridField& v, const GridField& w,
                                                 const StepSpec& spec) {
  shape_check(v, w);
  const Domain& dom = v.domain();
  const int d = dom.dim;
  check_unit(spec.eta, "eta");
  check_unit(spec.E, "E");
  if ((int)spec.E.size() != v.k()) throw precondition_error("E dimension must match codimension k");
  if ((int)spec.eta.size() != d) throw precondition_error("eta dimension must match d");
  if (spec.lambda <= 0) throw precondition_error("lambda must be positive");
  if (spec.amplitude.kind() != FieldKind::scalar)
    throw precondition_error("amplitude must be scalar");

  GridField g = scalar_projection(v, spec.E);
  std::vector<GridField> dg = gradient(g);
  std::vector<GridField> da = gradient(spec.amplitude);
  const long valid =
      std::min({v.valid(), w.valid(), spec.amplitude.valid(), dg[0].valid(), da[0].valid()});

  GridField vt = v, wt = w;
  const double l = spec.lambda;
  const double* a = spec.amplitude.comp(0).data();
  for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
    double t = 0;
    for (int b = 0; b < d; ++b) t += spec.eta(b) * x[b];
    const double G = StepProfile::gamma(l * t);
    const double Gb = StepProfile::gamma_bar(l * t);
    const double Gd = StepProfile::gamma_dbar(l * t);
    const double av = a[flat];
    for (int c = 0; c < v.k(); ++c) vt.comp(c)[flat] += (av / l) * G * spec.E(c);
    for (int j = 0; j < d; ++j)
      wt.comp(j)[flat] += -(av / l) * G * dg[j].comp(0)[flat] -
                          (av / (l * l)) * Gb * da[j].comp(0)[flat] +
                          (av * av / l) * Gd * spec.eta(j);
  });
  vt.set_valid(valid);
  wt.set_valid(valid);
  return {std::move(vt), std::move(wt)};
}

GridField corrugation_residual(const GridField& v, const GridField& w, const GridField& vt,
                               const GridField& wt, const StepSpec& spec) {
  const Domain& dom = v.domain();
  const int d = dom.dim;
  GridField R = stretching_content(vt, wt);
  R -= stretching_content(v, w);

  GridField Hg = hessian_sym(scalar_projection(v, spec.E));
  GridField Ha = hessian_sym(spec.amplitude);
  std::vector<GridField> da = gradient(spec.amplitude);

  const long valid = std::min({R.valid(), Hg.valid(), Ha.valid()});
  const double l = spec.lambda;
  const double* a = spec.amplitude.comp(0).data();
  for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
    double t = 0;
    for (int b = 0; b < d; ++b) t += spec.eta(b) * x[b];
    const double G = StepProfile::gamma(l * t);
    const double Gb = StepProfile::gamma_bar(l * t);
    const double av = a[flat];
    for (int p = 0; p < d; ++p)
      for (int q = p; q < d; ++q) {
        const double rhs =
            -(av / l) * G * Hg.sym(p, q, flat) +
            (0.5 * G * G - Gb) / (l * l) * da[p].comp(0)[flat] * da[q].comp(0)[flat] -
            (av / (l * l)) * Gb * Ha.sym(p, q, flat);
        R.sym(p, q, flat) -= av * av * spec.eta(p) * spec.eta(q) + rhs;
      }
  });
  R.set_valid(valid);
  return R;
}

std::pair<GridField, GridField> multi_corrugation_step(const GridField& v, const GridField& w,
                                                       const std::vector<StepSpec>& specs) {
  shape_check(v, w);
  if ((int)specs.size() > v.k())
    throw precondition_error("at most k corrugations can share orthonormal codimension axes");
  for (size_t i = 0; i < specs.size(); ++i)
    for (size_t j = 0; j <= i; ++j) {
      const double dot = specs[i].E.dot(specs[j].E);
      const double want = i == j ? 1.0 : 0.0;
      if (std::abs(dot - want) > 1e-10)
        throw precondition_error("codimension axes E_i must be orthonormal");
    }
  const Domain& dom = v.domain();
  const int d = dom.dim;
  GridField vt = v, wt = w;
  long valid = std::min(v.valid(), w.valid());
  for (const auto& s : specs) {
    check_unit(s.eta, "eta");
    GridField g = scalar_projection(v, s.E);
    std::vector<GridField> dg = gradient(g);
    std::vector<GridField> da = gradient(s.amplitude);
    valid = std::min({valid, s.amplitude.valid(), dg[0].valid(), da[0].valid()});
    const double l = s.lambda;
    const double* a = s.amplitude.comp(0).data();
    for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
      double t = 0;
      for (int b = 0; b < d; ++b) t += s.eta(b) * x[b];
      const double G = StepProfile::gamma(l * t);
      const double Gb = StepProfile::gamma_bar(l * t);
      const double Gd = StepProfile::gamma_dbar(l * t);
      const double av = a[flat];
      for (int c = 0; c < v.k(); ++c) vt.comp(c)[flat] += (av / l) * G * s.E(c);
      for (int j = 0; j < d; ++j)
        wt.comp(j)[flat] += -(av / l) * G * dg[j].comp(0)[flat] -
                            (av / (l * l)) * Gb * da[j].comp(0)[flat] +
                            (av * av / l) * Gd * s.eta(j);
    });
  }
  vt.set_valid(valid);
  wt.set_valid(valid);
  return {std::move(vt), std::move(wt)};
}

GridField multi_corrugation_residual(const GridField& v, const GridField& w, const GridField& vt,
                                     const GridField& wt, const std::vector<StepSpec>& specs) {
  const Domain& dom = v.domain();
  const int d = dom.dim;
  GridField R = stretching_content(vt, wt);
  R -= stretching_content(v, w);
  long valid = R.valid();
  for (const auto& s : specs) {
    GridField Hg = hessian_sym(scalar_projection(v, s.E));
    GridField Ha = hessian_sym(s.amplitude);
    std::vector<GridField> da = gradient(s.amplitude);
    valid = std::min({valid, Hg.valid(), Ha.valid()});
    const double l = s.lambda;
    const double* a = s.amplitude.comp(0).data();
    for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
      double t = 0;
      for (int b = 0; b < d; ++b) t += s.eta(b) * x[b];
      const double G = StepProfile::gamma(l * t);
      const double Gb = StepProfile::gamma_bar(l * t);
      const double av = a[flat];
      for (int p = 0; p < d; ++p)
        for (int q = p; q < d; ++q) {
          const double rhs =
              -(av / l) * G * Hg.sym(p, q, flat) +
              (0.5 * G * G - Gb) / (l * l) * da[p].comp(0)[flat] * da[q].comp(0)[flat] -
              (av / (l * l)) * Gb * Ha.sym(p, q, flat);
          R.sym(p, q, flat) -= av * av * s.eta(p) * s.eta(q) + rhs;
        }
    });
  }
  R.set_valid(valid);
  return R;
}

std::pair<GridField, GridField> spiral_step(const GridField& v, const GridField& w,
                                            const SpiralSpec& spec) {
  shape_check(v, w);
  if (v.k() < 2) throw precondition_error("spiral step needs codimension k >= 2");
  check_unit(spec.eta, "eta");
  check_unit(spec.E1, "E1");
  check_unit(spec.E2, "E2");
  if (std::abs(spec.E1.dot(spec.E2)) > 1e-10)
    throw precondition_error("E1, E2 must be orthogonal");
  const Domain& dom = v.domain();
  const int d = dom.dim;

  std::vector<GridField> dg1 = gradient(scalar_projection(v, spec.E1));
  std::vector<GridField> dg2 = gradient(scalar_projection(v, spec.E2));
  const long valid = std::min({v.valid(), w.valid(), spec.amplitude.valid(), dg1[0].valid()});

  GridField vt = v, wt = w;
  const double l = spec.lambda;
  const double* a = spec.amplitude.comp(0).data();
  for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
    double t = 0;
    for (int b = 0; b < d; ++b) t += spec.eta(b) * x[b];
    const double G = StepProfile::g(l * t);
    const double Gb = StepProfile::g_bar(l * t);
    const double av = a[flat];
    for (int c = 0; c < v.k(); ++c)
      vt.comp(c)[flat] += (av / l) * (G * spec.E1(c) + Gb * spec.E2(c));
    for (int j = 0; j < d; ++j)
      wt.comp(j)[flat] -= (av / l) * (G * dg1[j].comp(0)[flat] + Gb * dg2[j].comp(0)[flat]);
  });
  vt.set_valid(valid);
  wt.set_valid(valid);
  return {std::move(vt), std::move(wt)};
}

GridField spiral_residual(const GridField& v, const GridField& w, const GridField& vt,
                          const GridField& wt, const SpiralSpec& spec) {
  const Domain& dom = v.domain();
  const int d = dom.dim;
  GridField R = stretching_content(vt, wt);
  R -= stretching_content(v, w);
  GridField H1 = hessian_sym(scalar_projection(v, spec.E1));
  GridField H2 = hessian_sym(scalar_projection(v, spec.E2));
  std::vector<GridField> da = gradient(spec.amplitude);
  const long valid = std::min({R.valid(), H1.valid(), da[0].valid()});
  const double l = spec.lambda;
  const double* a = spec.amplitude.comp(0).data();
  for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
    double t = 0;
    for (int b = 0; b < d; ++b) t += spec.eta(b) * x[b];
    const double G = StepProfile::g(l * t);
    const double Gb = StepProfile::g_bar(l * t);
    const double av = a[flat];
    for (int p = 0; p < d; ++p)
      for (int q = p; q < d; ++q) {
        const double rhs = -(av / l) * (G * H1.sym(p, q, flat) + Gb * H2.sym(p, q, flat)) +
                           da[p].comp(0)[flat] * da[q].comp(0)[flat] / (2 * l * l);
        R.sym(p, q, flat) -= 0.5 * av * av * spec.eta(p) * spec.eta(q) + rhs;
      }
  });
  R.set_valid(valid);
  return R;
}

std::pair<GridField, GridField> multi_spiral_step(const GridField& v, const GridField& w,
                                                  const std::vector<GridField>& amplitudes,
                                                  const std::vector<Eigen::VectorXd>& etas,
                                                  double lambda) {
  shape_check(v, w);
  const Domain& dom = v.domain();
  const int d = dom.dim;
  const int ds = (int)etas.size();
  if (v.k() < 2 * ds)
    throw precondition_error("simultaneous spirals need k >= " + std::to_string(2 * ds));
  if (amplitudes.size() != etas.size())
    throw precondition_error("amplitude/direction count mismatch");

  std::vector<GridField> dv = gradient(v);
  long valid = std::min({v.valid(), w.valid(), dv[0].valid()});
  for (const auto& a : amplitudes) valid = std::min(valid, a.valid());

  GridField vt = v, wt = w;
  for (int i = 0; i < ds; ++i) {
    check_unit(etas[i], "eta");
    const double* a = amplitudes[i].comp(0).data();
    for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
      double t = 0;
      for (int b = 0; b < d; ++b) t += etas[i](b) * x[b];
      const double G = StepProfile::g(lambda * t);
      const double Gb = StepProfile::g_bar(lambda * t);
      const double av = a[flat];
      vt.comp(i)[flat] += (av / lambda) * G;
      vt.comp(ds + i)[flat] += (av / lambda) * Gb;
      for (int j = 0; j < d; ++j)
        wt.comp(j)[flat] -=
            (av / lambda) * (G * dv[j].comp(i)[flat] + Gb * dv[j].comp(ds + i)[flat]);
    });
  }
  vt.set_valid(valid);
  wt.set_valid(valid);
  return {std::move(vt), std::move(wt)};
}

GridField multi_spiral_error(const std::vector<GridField>& amplitudes,
                             const std::vector<Eigen::VectorXd>& etas, double lambda,
                             const std::vector<GridField>& hessians) {
  const int ds = (int)etas.size();
  if ((int)hessians.size() < 2 * ds)
    throw precondition_error("multi_spiral_error needs 2*dstar component Hessians");
  const Domain& dom = amplitudes.at(0).domain();
  const int d = dom.dim;
  GridField E = GridField::symmatrix(dom);
  long valid = dom.margin;
  std::vector<std::vector<GridField>> da;
  for (const auto& a : amplitudes) {
    std::vector<GridField> g = gradient(a);
    valid = std::min(valid, g[0].valid());
    da.push_back(std::move(g));
  }
  for (const auto& H : hessians) valid = std::min(valid, H.valid());

  for (int i = 0; i < ds; ++i) {
    const double* a = amplitudes[i].comp(0).data();
    for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>& x) {
      double t = 0;
      for (int b = 0; b < d; ++b) t += etas[i](b) * x[b];
      const double G = StepProfile::g(lambda * t);
      const double Gb = StepProfile::g_bar(lambda * t);
      const double av = a[flat];
      for (int p = 0; p < d; ++p)
        for (int q = p; q < d; ++q)
          E.sym(p, q, flat) +=
              -(av / lambda) *
                  (G * hessians[i].sym(p, q, flat) + Gb * hessians[ds + i].sym(p, q, flat)) +
              da[i][p].comp(0)[flat] * da[i][q].comp(0)[flat] / (2 * lambda * lambda);
    });
  }
  E.set_valid(valid);
  return E;
}

GridField multi_spiral_residual(const GridField& v, const GridField& w, const GridField& vt,
                                const GridField& wt, const std::vector<GridField>& amplitudes,
                                const std::vector<Eigen::VectorXd>& etas, double lambda) {
  const Domain& dom = v.domain();
  const int d = dom.dim;
  const int ds = (int)etas.size();
  GridField R = stretching_content(vt, wt);
  R -= stretching_content(v, w);
  std::vector<GridField> hess;
  for (int c = 0; c < 2 * ds; ++c) {
    GridField comp = GridField::scalar(dom);
    comp.comp(0) = v.comp(c);
    comp.set_valid(v.valid());
    hess.push_back(hessian_sym(comp));
  }
  GridField E = multi_spiral_error(amplitudes, etas, lambda, hess);
  long valid = std::min(R.valid(), E.valid());
  R -= E;
  for (int i = 0; i < ds; ++i) {
    const double* a = amplitudes[i].comp(0).data();
    for_each_point(dom, valid, [&](long flat, const std::array<double, kMaxDim>&) {
      const double av = a[flat];
      for (int p = 0; p < d; ++p)
        for (int q = p; q < d; ++q) R.sym(p, q, flat) -= 0.5 * av * av * etas[i](p) * etas[i](q);
    });
  }
  R.set_valid(valid);
  return R;
}

}  // namespace vkci
