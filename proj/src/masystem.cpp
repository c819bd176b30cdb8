#include "vkci/masystem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace vkci {

namespace {

// cumulative integral along one axis from the center grid plane, 4th-order
// interval rule (-1,13,13,-1)/24 with one-sided closures at the array ends
class LineIntegrator {
 public:
  LineIntegrator(const Domain& dom, int axis) : dom_(dom), axis_(axis) {
    stride_ = dom.strides()[axis];
    count_ = dom.axis_points();
    center_ = dom.margin + dom.n / 2;
  }

  // integrates g along `axis`, writing u with u(center plane) = 0
  void run(const std::vector<double>& g, std::vector<double>& u) const {
    const long total = dom_.total_points();
    std::vector<long> starts;
    starts.reserve(total / count_);
    // line starts: indices with coordinate 0 along `axis`
    const auto st = dom_.strides();
    std::function<void(int, long)> rec = [&](int a, long base) {
      if (a == dom_.dim) {
        starts.push_back(base);
        return;
      }
      if (a == axis_) {
        rec(a + 1, base);
        return;
      }
      for (long j = 0; j < count_; ++j) rec(a + 1, base + j * st[a]);
    };
    rec(0, 0);

    const double h = dom_.h;
    for (long base : starts) {
      auto at = [&](long j) { return g[base + j * stride_]; };
      auto interval = [&](long j) {  // integral over [x_j, x_{j+1}]
        if (j - 1 >= 0 && j + 2 < count_)
          return h * (-at(j - 1) + 13 * at(j) + 13 * at(j + 1) - at(j + 2)) / 24.0;
        if (j - 1 < 0) return h * (9 * at(j) + 19 * at(j + 1) - 5 * at(j + 2) + at(j + 3)) / 24.0;
        return h * (at(j - 3) - 5 * at(j - 2) + 19 * at(j - 1) + 9 * at(j)) / 24.0;
      };
      u[base + center_ * stride_] = 0.0;
      for (long j = center_; j + 1 < count_; ++j)
        u[base + (j + 1) * stride_] = u[base + j * stride_] + interval(j);
      for (long j = center_; j > 0; --j)
        u[base + (j - 1) * stride_] = u[base + j * stride_] - interval(j - 1);
    }
  }

  long center() const { return center_; }

 private:
  Domain dom_;
  int axis_;
  long stride_, count_, center_;
};

// value of f frozen at the center plane of every axis < a
double frozen_value(const Domain& dom, const std::vector<double>& f, int frozen_axes,
                    const std::array<long, kMaxDim>& idx) {
  const auto st = dom.strides();
  const long center = dom.margin + dom.n / 2;
  long flat = 0;
  for (int b = 0; b < dom.dim; ++b) flat += (b < frozen_axes ? center : idx[b]) * st[b];
  return f[flat];
}

// scalar potential of a closed 1-form g (components g[0..d-1]):
// u(x) = sum_a int of g_a along axis a with axes < a frozen at the center
GridField primitive_1form(const std::vector<GridField>& g) {
  const Domain& dom = g[0].domain();
  GridField u = GridField::scalar(dom);
  long valid = dom.margin;
  for (const auto& f : g) valid = std::min(valid, f.valid());
  std::vector<double> tmp(dom.total_points(), 0.0);
  for (int a = 0; a < dom.dim; ++a) {
    LineIntegrator li(dom, a);
    li.run(g[a].comp(0), tmp);
    double* dst = u.comp(0).data();
    for_each_index(dom, 0, dom.axis_points() - 1,
                   [&](long flat, const std::array<long, kMaxDim>& idx) {
                     dst[flat] += frozen_value(dom, tmp, a, idx);
                   });
  }
  u.set_valid(valid);
  return u;
}

// vector potential of a closed 2-form B (components B[i][j], skew):
// alpha_j = sum_{a<j} int of B_{aj} along axis a with axes < a frozen
GridField primitive_2form(const std::vector<std::vector<GridField>>& B, long valid_in) {
  const Domain& dom = B[0][1].domain();
  const int d = dom.dim;
  GridField alpha = GridField::vector(dom, d);
  std::vector<double> tmp(dom.total_points(), 0.0);
  for (int j = 1; j < d; ++j) {
    for (int a = 0; a < j; ++a) {
      LineIntegrator li(dom, a);
      li.run(B[a][j].comp(0), tmp);
      double* dst = alpha.comp(j).data();
      for_each_index(dom, 0, dom.axis_points() - 1,
                     [&](long flat, const std::array<long, kMaxDim>& idx) {
                       dst[flat] += frozen_value(dom, tmp, a, idx);
                     });
    }
  }
  alpha.set_valid(valid_in);
  return alpha;
}

}  // namespace

CurvatureField::CurvatureField(const Domain& dom) : dom_(dom), valid_(dom.margin) {
  const int d = dom.dim;
  pair_index_.assign(d, std::vector<int>(d, -1));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      pair_index_[i][j] = (int)pairs_.size();
      pairs_.emplace_back(i, j);
    }
  const int m = (int)pairs_.size();
  data_.assign(m * (m + 1) / 2, std::vector<double>(dom.total_points(), 0.0));
}

std::vector<double>& CurvatureField::canon(int p, int q) {
  if (p > q) std::swap(p, q);
  const int m = pair_count();
  return data_[p * m - p * (p - 1) / 2 + (q - p)];
}

const std::vector<double>& CurvatureField::canon(int p, int q) const {
  return const_cast<CurvatureField*>(this)->canon(p, q);
}

double CurvatureField::value(int i, int j, int s, int t, long flat) const {
  if (i == j || s == t) return 0.0;
  double sign = 1.0;
  if (i > j) {
    std::swap(i, j);
    sign = -sign;
  }
  if (s > t) {
    std::swap(s, t);
    sign = -sign;
  }
  return sign * canon(pair_index_[i][j], pair_index_[s][t])[flat];
}

double CurvatureField::sup() const {
  double m = 0;
  for (const auto& comp : data_) {
    for_each_index(dom_, dom_.margin, dom_.margin + dom_.n,
                   [&](long flat, const std::array<long, kMaxDim>&) {
                     m = std::max(m, std::abs(comp[flat]));
                   });
  }
  return m;
}

GridField CurvatureField::to_grid_field() const {
  GridField g(dom_, FieldKind::curvature, dom_.dim);
  const int m = pair_count();
  int c = 0;
  for (int p = 0; p < m; ++p)
    for (int q = p; q < m; ++q) g.comp(c++) = canon(p, q);
  g.set_valid(valid_);
  return g;
}

CurvatureField c2_operator(const GridField& A) {
  if (A.kind() != FieldKind::symmatrix) throw precondition_error("c2_operator needs a symmatrix field");
  const Domain& dom = A.domain();
  const int d = dom.dim;
  CurvatureField F(dom);
  if (d < 2) {
    F.set_valid(A.valid());
    return F;
  }
  // mixed second derivatives of every component of A
  std::map<std::pair<int, int>, GridField> D2;
  long valid = A.valid();
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      std::array<int, kMaxDim> mu{};
      mu[a] += 1;
      mu[b] += 1;
      GridField g = derivative(A, mu);
      valid = std::min(valid, g.valid());
      D2.emplace(std::make_pair(a, b), std::move(g));
    }
  auto d2 = [&](int a, int b) -> const GridField& {
    if (a > b) std::swap(a, b);
    return D2.at({a, b});
  };
  const long total = dom.total_points();
  for (int p = 0; p < F.pair_count(); ++p)
    for (int q = p; q < F.pair_count(); ++q) {
      auto [i, j] = F.pair(p);
      auto [s, t] = F.pair(q);
      std::vector<double>& out = F.canon(p, q);
      const std::vector<double>& a_is = d2(i, s).comp(sym_index(d, j, t));
      const std::vector<double>& a_jt = d2(j, t).comp(sym_index(d, i, s));
      const std::vector<double>& a_it = d2(i, t).comp(sym_index(d, j, s));
      const std::vector<double>& a_js = d2(j, s).comp(sym_index(d, i, t));
      for (long f = 0; f < total; ++f) out[f] = a_is[f] + a_jt[f] - a_it[f] - a_js[f];
    }
  F.set_valid(valid);
  return F;
}

CurvatureField det_hessian(const GridField& v) {
  if (v.kind() != FieldKind::vector) throw precondition_error("det_hessian needs a vector field");
  const Domain& dom = v.domain();
  const int d = dom.dim;
  CurvatureField F(dom);
  if (d < 2) {
    F.set_valid(v.valid());
    return F;
  }
  std::map<std::pair<int, int>, GridField> H;
  long valid = v.valid();
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      std::array<int, kMaxDim> mu{};
      mu[a] += 1;
      mu[b] += 1;
      GridField g = derivative(v, mu);
      valid = std::min(valid, g.valid());
      H.emplace(std::make_pair(a, b), std::move(g));
    }
  auto hh = [&](int a, int b) -> const GridField& {
    if (a > b) std::swap(a, b);
    return H.at({a, b});
  };
  const long total = dom.total_points();
  for (int p = 0; p < F.pair_count(); ++p)
    for (int q = p; q < F.pair_count(); ++q) {
      auto [i, j] = F.pair(p);
      auto [s, t] = F.pair(q);
      std::vector<double>& out = F.canon(p, q);
      std::fill(out.begin(), out.end(), 0.0);
      for (int c = 0; c < v.k(); ++c) {
        const std::vector<double>& is = hh(i, s).comp(c);
        const std::vector<double>& jt = hh(j, t).comp(c);
        const std::vector<double>& it = hh(i, t).comp(c);
        const std::vector<double>& js = hh(j, s).comp(c);
        for (long f = 0; f < total; ++f) out[f] += is[f] * jt[f] - it[f] * js[f];
      }
    }
  F.set_valid(valid);
  return F;
}

CompatibilityReport check_compatibility(const CurvatureField& F) {
  const Domain& dom = F.domain();
  const int d = dom.dim;
  CompatibilityReport rep;
  // first Bianchi: F_{ij,st} + F_{is,tj} + F_{it,js} = 0
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) {
          for_each_index(dom, dom.margin, dom.margin + dom.n,
                         [&](long flat, const std::array<long, kMaxDim>&) {
                           const double r = F.value(i, j, s, t, flat) + F.value(i, s, t, j, flat) +
                                            F.value(i, t, j, s, flat);
                           rep.algebraic = std::max(rep.algebraic, std::abs(r));
                         });
        }
  // differential Bianchi: dq F_{ij,st} + ds F_{ij,tq} + dt F_{ij,qs} = 0
  for (int p = 0; p < F.pair_count(); ++p) {
    auto [i, j] = F.pair(p);
    for (int q = 0; q < d; ++q)
      for (int s = q + 1; s < d; ++s)
        for (int t = s + 1; t < d; ++t) {
          // build the three scalar fields and differentiate
          auto field_of = [&](int a, int b) {
            GridField g = GridField::scalar(dom);
            const long total = dom.total_points();
            for (long f = 0; f < total; ++f) g.comp(0)[f] = F.value(i, j, a, b, f);
            g.set_valid(F.valid());
            return g;
          };
          GridField g1 = derivative(field_of(s, t), q, 1);
          GridField g2 = derivative(field_of(t, q), s, 1);
          GridField g3 = derivative(field_of(q, s), t, 1);
          g1 += g2;
          g1 += g3;
          rep.differential = std::max(rep.differential, sup_norm(g1));
        }
  }
  return rep;
}

GridField invert_c2(const CurvatureField& F, double tol) {
  const Domain& dom = F.domain();
  const int d = dom.dim;
  CompatibilityReport rep = check_compatibility(F);
  if (std::max(rep.algebraic, rep.differential) > tol) {
    std::ostringstream os;
    os << "incompatible curvature data: Bianchi residuals " << rep.algebraic << " (algebraic), "
       << rep.differential << " (differential) exceed " << tol;
    throw precondition_error(os.str());
  }
  GridField A = GridField::symmatrix(dom);
  if (d < 2) {
    A.set_valid(F.valid());
    return A;  // C2 is trivial in d=1: A = 0 satisfies C2(A) = 0 = F
  }

  // layer 1: for each pair s<t, phi_st with F_{ij,st} = di phi_st^j - dj phi_st^i
  std::map<std::pair<int, int>, GridField> phi;
  for (int pq = 0; pq < F.pair_count(); ++pq) {
    auto [s, t] = F.pair(pq);
    std::vector<std::vector<GridField>> B(d, std::vector<GridField>(d, GridField::scalar(dom)));
    const long total = dom.total_points();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        for (long f = 0; f < total; ++f) B[i][j].comp(0)[f] = F.value(i, j, s, t, f);
      }
    phi.emplace(std::make_pair(s, t), primitive_2form(B, F.valid()));
  }
  auto phi_comp = [&](int s, int t, int j, long flat) -> double {
    if (s == t) return 0.0;
    if (s < t) return phi.at({s, t}).comp(j)[flat];
    return -phi.at({t, s}).comp(j)[flat];
  };

  // layer 2: for each t, eta_t with phi_st^j - phi_jt^s = dj eta_t^s - ds eta_t^j
  std::vector<GridField> eta;
  const long total = dom.total_points();
  for (int t = 0; t < d; ++t) {
    std::vector<std::vector<GridField>> B(d, std::vector<GridField>(d, GridField::scalar(dom)));
    for (int j = 0; j < d; ++j)
      for (int s = 0; s < d; ++s) {
        if (j == s) continue;
        for (long f = 0; f < total; ++f)
          B[j][s].comp(0)[f] = phi_comp(s, t, j, f) - phi_comp(j, t, s, f);
      }
    eta.push_back(primitive_2form(B, F.valid()));
  }

  // A_ij = -1/2 (eta_j^i + eta_i^j)
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      std::vector<double>& out = A.comp(sym_index(d, i, j));
      const std::vector<double>& a = eta[j].comp(i);
      const std::vector<double>& b = eta[i].comp(j);
      for (long f = 0; f < total; ++f) out[f] = -0.5 * (a[f] + b[f]);
    }
  A.set_valid(F.valid());
  return A;
}

GridField kernel_certificate(const GridField& A, double tol) {
  if (A.kind() != FieldKind::symmatrix)
    throw precondition_error("kernel_certificate needs a symmatrix field");
  const Domain& dom = A.domain();
  const int d = dom.dim;
  CurvatureField F = c2_operator(A);
  const double r = F.sup();
  if (r > tol)
    throw precondition_error("field is not in the kernel: |C2(A)| = " + std::to_string(r) +
                             " > " + std::to_string(tol));

  // phi_st from ds A_jt - dt A_js = -dj phi_st
  std::map<std::pair<int, int>, GridField> phi;
  long valid = A.valid();
  for (int s = 0; s < d; ++s)
    for (int t = s + 1; t < d; ++t) {
      GridField As = derivative(A, s, 1);
      GridField At = derivative(A, t, 1);
      std::vector<GridField> g;
      for (int j = 0; j < d; ++j) {
        GridField gj = GridField::scalar(dom);
        const long total = dom.total_points();
        for (long f = 0; f < total; ++f)
          gj.comp(0)[f] = -(As.comp(sym_index(d, j, t))[f] - At.comp(sym_index(d, j, s))[f]);
        gj.set_valid(std::min(As.valid(), At.valid()));
        g.push_back(std::move(gj));
      }
      GridField p = primitive_1form(g);
      valid = std::min(valid, p.valid());
      phi.emplace(std::make_pair(s, t), std::move(p));
    }
  auto phi_at = [&](int s, int t, long flat) -> double {
    if (s == t) return 0.0;
    if (s < t) return phi.at({s, t}).comp(0)[flat];
    return -phi.at({t, s}).comp(0)[flat];
  };

  // row t of A + phi is the gradient of w^t
  GridField w = GridField::vector(dom, d);
  const long total = dom.total_points();
  for (int t = 0; t < d; ++t) {
    std::vector<GridField> g;
    for (int j = 0; j < d; ++j) {
      GridField gj = GridField::scalar(dom);
      for (long f = 0; f < total; ++f)
        gj.comp(0)[f] = A.comp(sym_index(d, t, j))[f] + phi_at(t, j, f);
      gj.set_valid(valid);
      g.push_back(std::move(gj));
    }
    GridField wt = primitive_1form(g);
    w.comp(t) = std::move(wt.comp(0));
    valid = std::min(valid, wt.valid());
  }
  w.set_valid(valid);
  return w;
}

WeakMAResult weak_ma_solve(const CurvatureField& F, const GridField& v_target, double eps,
                           double alpha, StageKind kind, const NKParams* base_params) {
  const Domain& dom = v_target.domain();
  const int d = dom.dim;
  // A with C2(A) = -F
  CurvatureField mF(dom);
  for (int p = 0; p < F.pair_count(); ++p)
    for (int q = p; q < F.pair_count(); ++q) {
      const std::vector<double>& src = F.canon(p, q);
      std::vector<double>& dst = mF.canon(p, q);
      for (long f = 0; f < dom.total_points(); ++f) dst[f] = -src[f];
    }
  mF.set_valid(F.valid());
  GridField A = invert_c2(mF);

  // smallest power-of-two C with A + C Id - (1/2)(grad v)^T grad v >= 0.01 Id
  GridField vt = v_target;
  GridField w0 = GridField::vector(dom, d);
  GridField base = deficit(A, vt, w0);
  double C = 1.0 / 1048576.0;
  for (; C <= 1048576.0; C *= 2) {
    GridField shifted = base;
    const long total = dom.total_points();
    for (int i = 0; i < d; ++i)
      for (long f = 0; f < total; ++f) shifted.sym(i, i, f) += C;
    shifted.set_valid(base.valid());
    if (min_eigenvalue(shifted, shifted.valid()) >= 0.01) break;
  }
  if (C > 1048576.0) throw divergence_error("no admissible identity shift found");

  GridField A_shift = A;
  {
    const long total = dom.total_points();
    for (int i = 0; i < d; ++i)
      for (long f = 0; f < total; ++f) A_shift.sym(i, i, f) += C;
  }

  FlexibilityResult flex = flexibility_solve(vt, w0, A_shift, eps, alpha, kind, base_params);

  WeakMAResult out{std::move(flex.v), std::move(flex.w), std::move(A), C, 0, 0, flex.report};
  out.vk_residual = flex.report.vk_residual;
  GridField dv = out.v;
  dv -= v_target;
  out.v_dist = sup_norm(dv);
  // report w against the unshifted A as well: w - C x solves the original form
  subtract_linear_shift(out.w, C);
  return out;
}

}  // namespace vkci
