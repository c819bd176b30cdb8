#include "vkci/grid.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace vkci {

namespace {

// Row-major odometer over [lo,hi]^d, no type erasure on the hot paths.
template <class Fn>
void visit_box(const Domain& dom, long lo, long hi, Fn&& fn) {
  const int d = dom.dim;
  const auto st = dom.strides();
  std::array<long, kMaxDim> idx{};
  for (int a = 0; a < d; ++a) idx[a] = lo;
  long flat = 0;
  for (int a = 0; a < d; ++a) flat += lo * st[a];
  const long span = hi - lo;
  while (true) {
    fn(flat, idx);
    int a = d - 1;
    while (a >= 0) {
      if (idx[a] - lo < span) {
        ++idx[a];
        flat += st[a];
        break;
      }
      flat -= span * st[a];
      idx[a] = lo;
      --a;
    }
    if (a < 0) break;
  }
}

struct Stencil {
  int halfwidth;
  std::array<double, 7> c;  // offsets -hw..hw
};

// 4th-order centered stencils for d/dx^m, m = 1..4.
const Stencil& stencil(int order) {
  static const Stencil s1{2, {0, 1.0 / 12, -8.0 / 12, 0, 8.0 / 12, -1.0 / 12, 0}};
  static const Stencil s2{2, {0, -1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12, 0}};
  static const Stencil s3{3, {1.0 / 8, -1.0, 13.0 / 8, 0, -13.0 / 8, 1.0, -1.0 / 8}};
  static const Stencil s4{3, {-1.0 / 6, 2.0, -39.0 / 6, 56.0 / 6, -39.0 / 6, 2.0, -1.0 / 6}};
  switch (order) {
    case 1: return s1;
    case 2: return s2;
    case 3: return s3;
    case 4: return s4;
    default: throw config_error("derivative order must be 1..4");
  }
}

}  // namespace

Domain::Domain(int d_, long n_, long margin_) : dim(d_), n(n_), margin(margin_), h(1.0 / double(n_)) {
  if (dim < 1 || dim > kMaxDim) throw config_error("domain dimension must be 1..4");
  if (n < 4) throw config_error("grid count must be >= 4");
  if (margin < 0) throw config_error("margin must be >= 0");
}

long Domain::total_points() const {
  long t = 1;
  for (int a = 0; a < dim; ++a) t *= axis_points();
  return t;
}

std::array<long, kMaxDim> Domain::strides() const {
  std::array<long, kMaxDim> st{};
  long s = 1;
  for (int a = dim - 1; a >= 0; --a) {
    st[a] = s;
    s *= axis_points();
  }
  return st;
}

int component_count(FieldKind kind, int d, int k) {
  switch (kind) {
    case FieldKind::scalar: return 1;
    case FieldKind::vector: return k;
    case FieldKind::symmatrix: return sym_dim(d);
    case FieldKind::curvature: {
      int m = d * (d - 1) / 2;  // independent index pairs i<j
      return m * (m + 1) / 2;
    }
  }
  return 1;
}

GridField::GridField(const Domain& dom, FieldKind kind, int k)
    : dom_(dom), kind_(kind), k_(k), valid_(dom.margin) {
  data_.assign(component_count(kind, dom.dim, k), std::vector<double>(dom.total_points(), 0.0));
}

GridField& GridField::operator+=(const GridField& o) {
  valid_ = std::min(valid_, o.valid_);
  for (int c = 0; c < components(); ++c) {
    double* a = data_[c].data();
    const double* b = o.data_[c].data();
    const long np = (long)data_[c].size();
    for (long i = 0; i < np; ++i) a[i] += b[i];
  }
  return *this;
}

GridField& GridField::operator-=(const GridField& o) {
  valid_ = std::min(valid_, o.valid_);
  for (int c = 0; c < components(); ++c) {
    double* a = data_[c].data();
    const double* b = o.data_[c].data();
    const long np = (long)data_[c].size();
    for (long i = 0; i < np; ++i) a[i] -= b[i];
  }
  return *this;
}

GridField& GridField::operator*=(double s) {
  for (auto& v : data_)
    for (double& x : v) x *= s;
  return *this;
}

void GridField::check_finite(const std::string& what) const {
  const long lo = dom_.margin - valid_, hi = dom_.margin + dom_.n + valid_;
  for (int c = 0; c < components(); ++c) {
    bool ok = true;
    visit_box(dom_, lo, hi, [&](long flat, const std::array<long, kMaxDim>&) {
      if (!std::isfinite(data_[c][flat])) ok = false;
    });
    if (!ok) throw precondition_error(what + ": non-finite value in component " + std::to_string(c));
  }
}

void for_each_point(const Domain& dom, long within,
                    const std::function<void(long, const std::array<double, kMaxDim>&)>& fn) {
  const long lo = dom.margin - within, hi = dom.margin + dom.n + within;
  std::array<double, kMaxDim> x{};
  visit_box(dom, lo, hi, [&](long flat, const std::array<long, kMaxDim>& idx) {
    for (int a = 0; a < dom.dim; ++a) x[a] = dom.coord(idx[a]);
    fn(flat, x);
  });
}

void for_each_index(const Domain& dom, long lo, long hi,
                    const std::function<void(long, const std::array<long, kMaxDim>&)>& fn) {
  visit_box(dom, lo, hi, fn);
}

GridField sample(const Domain& dom, FieldKind kind, int k,
                 const std::function<void(const std::array<double, kMaxDim>&, double*)>& f) {
  GridField out(dom, kind, k);
  const int nc = out.components();
  std::vector<double> buf(nc);
  std::array<double, kMaxDim> x{};
  visit_box(dom, 0, dom.axis_points() - 1, [&](long flat, const std::array<long, kMaxDim>& idx) {
    for (int a = 0; a < dom.dim; ++a) x[a] = dom.coord(idx[a]);
    f(x, buf.data());
    for (int c = 0; c < nc; ++c) out.comp(c)[flat] = buf[c];
  });
  return out;
}

long derivative_consumption(const std::array<int, kMaxDim>& multi) {
  long c = 0;
  for (int a = 0; a < kMaxDim; ++a)
    if (multi[a] > 0) c += stencil(multi[a]).halfwidth;
  return c;
}

static void apply_axis_stencil(const Domain& dom, const std::vector<double>& in,
                               std::vector<double>& out, int axis, int order, long valid_out) {
  const Stencil& st = stencil(order);
  const long stride = dom.strides()[axis];
  const double scale = 1.0 / std::pow(dom.h, order);
  const long lo = dom.margin - valid_out, hi = dom.margin + dom.n + valid_out;
  const int hw = st.halfwidth;
  visit_box(dom, lo, hi, [&](long flat, const std::array<long, kMaxDim>&) {
    double acc = 0;
    for (int o = -hw; o <= hw; ++o) acc += st.c[o + 3] * in[flat + o * stride];
    out[flat] = acc * scale;
  });
}

GridField derivative(const GridField& f, const std::array<int, kMaxDim>& multi) {
  int total = 0;
  for (int a = 0; a < kMaxDim; ++a) {
    if (multi[a] < 0) throw config_error("negative derivative order");
    if (a >= f.domain().dim && multi[a] > 0) throw config_error("derivative axis beyond dimension");
    total += multi[a];
  }
  if (total > 4) throw config_error("total derivative order must be <= 4");
  const long need = derivative_consumption(multi);
  if (f.valid() < need)
    throw resolvability_error("insufficient pad for derivative: have " + std::to_string(f.valid()) +
                              " cells, need " + std::to_string(need));
  GridField out = f;
  if (total == 0) return out;
  long valid = f.valid();
  std::vector<double> tmp(f.domain().total_points(), 0.0);
  for (int a = 0; a < f.domain().dim; ++a) {
    if (multi[a] == 0) continue;
    valid -= stencil(multi[a]).halfwidth;
    for (int c = 0; c < out.components(); ++c) {
      apply_axis_stencil(f.domain(), out.comp(c), tmp, a, multi[a], valid);
      std::swap(out.comp(c), tmp);
    }
  }
  out.set_valid(valid);
  return out;
}

GridField derivative(const GridField& f, int axis, int order) {
  std::array<int, kMaxDim> multi{};
  multi[axis] = order;
  return derivative(f, multi);
}

// --- mollifier ---------------------------------------------------------------

namespace {

double bump(double r2) {  // exp(-1/(1-r^2)) on r^2<1
  return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

struct Kernel {
  long radius = 0;                       // cells
  std::vector<long> flat_offset;         // into the padded array
  std::vector<std::array<long, kMaxDim>> offset;
  std::vector<double> weight;            // sums to exactly 1 after renorm
};

Kernel build_kernel(const Domain& dom, double l) {
  Kernel k;
  const double rl = l / dom.h;
  k.radius = (long)std::floor(rl - 1e-12);
  const auto st = dom.strides();
  double sum = 0;
  std::array<long, kMaxDim> o{};
  for (int a = 0; a < dom.dim; ++a) o[a] = -k.radius;
  while (true) {
    double r2 = 0;
    for (int a = 0; a < dom.dim; ++a) r2 += double(o[a]) * o[a];
    r2 /= rl * rl;
    const double w = bump(r2);
    if (w > 0) {
      long fo = 0;
      for (int a = 0; a < dom.dim; ++a) fo += o[a] * st[a];
      k.flat_offset.push_back(fo);
      k.offset.push_back(o);
      k.weight.push_back(w);
      sum += w;
    }
    int a = dom.dim - 1;
    while (a >= 0 && o[a] == k.radius) o[a--] = -k.radius;
    if (a < 0) break;
    ++o[a];
  }
  for (double& w : k.weight) w /= sum;
  return k;
}

void mollify_direct(const GridField& f, const Kernel& k, GridField& out, long valid_out) {
  const Domain& dom = f.domain();
  const long lo = dom.margin - valid_out, hi = dom.margin + dom.n + valid_out;
  const size_t nk = k.weight.size();
  for (int c = 0; c < f.components(); ++c) {
    const double* in = f.comp(c).data();
    double* o = out.comp(c).data();
    visit_box(dom, lo, hi, [&](long flat, const std::array<long, kMaxDim>&) {
      double acc = 0;
      for (size_t j = 0; j < nk; ++j) acc += k.weight[j] * in[flat + k.flat_offset[j]];
      o[flat] = acc;
    });
  }
}

// Circular FFT convolution over the full padded array. Wrap-around only
// pollutes points within `radius` of the array edge, which lie outside the
// returned valid region.
void mollify_fft(const GridField& f, const Kernel& k, GridField& out) {
  const Domain& dom = f.domain();
  const int d = dom.dim;
  const long ax = dom.axis_points();
  std::vector<int> dims(d, (int)ax);
  long real_n = dom.total_points();
  long cplx_n = 1;
  for (int a = 0; a < d - 1; ++a) cplx_n *= ax;
  cplx_n *= ax / 2 + 1;

  double* ker = fftw_alloc_real(real_n);
  double* buf = fftw_alloc_real(real_n);
  fftw_complex* khat = fftw_alloc_complex(cplx_n);
  fftw_complex* bhat = fftw_alloc_complex(cplx_n);

  std::memset(ker, 0, sizeof(double) * real_n);
  const auto st = dom.strides();
  for (size_t j = 0; j < k.weight.size(); ++j) {
    long flat = 0;
    for (int a = 0; a < d; ++a) {
      long w = (k.offset[j][a] % ax + ax) % ax;
      flat += w * st[a];
    }
    ker[flat] += k.weight[j];
  }

  fftw_plan pk = fftw_plan_dft_r2c(d, dims.data(), ker, khat, FFTW_ESTIMATE);
  fftw_plan pf = fftw_plan_dft_r2c(d, dims.data(), buf, bhat, FFTW_ESTIMATE);
  fftw_plan pb = fftw_plan_dft_c2r(d, dims.data(), bhat, buf, FFTW_ESTIMATE);
  fftw_execute(pk);

  const double inv_n = 1.0 / double(real_n);
  for (int c = 0; c < f.components(); ++c) {
    std::memcpy(buf, f.comp(c).data(), sizeof(double) * real_n);
    fftw_execute(pf);
    for (long i = 0; i < cplx_n; ++i) {
      const double re = bhat[i][0] * khat[i][0] - bhat[i][1] * khat[i][1];
      const double im = bhat[i][0] * khat[i][1] + bhat[i][1] * khat[i][0];
      bhat[i][0] = re * inv_n;
      bhat[i][1] = im * inv_n;
    }
    fftw_execute(pb);
    std::memcpy(out.comp(c).data(), buf, sizeof(double) * real_n);
  }
  fftw_destroy_plan(pk);
  fftw_destroy_plan(pf);
  fftw_destroy_plan(pb);
  fftw_free(ker);
  fftw_free(buf);
  fftw_free(khat);
  fftw_free(bhat);
}

}  // namespace

long mollify_consumption(const Domain& dom, double l) {
  return (long)std::floor(l / dom.h - 1e-12);
}

GridField mollify(const GridField& f, double l) {
  const Domain& dom = f.domain();
  if (l < 2.0 * dom.h)
    throw resolvability_error("mollification radius " + std::to_string(l) +
                              " below 2h: kernel not resolvable");
  if (l > double(f.valid()) * dom.h)
    throw resolvability_error("mollification radius " + std::to_string(l) + " exceeds valid pad " +
                              std::to_string(f.valid()) + " cells");
  Kernel k = build_kernel(dom, l);
  GridField out(dom, f.kind(), f.k());
  const long valid_out = f.valid() - k.radius;
  out.set_valid(valid_out);

  long out_pts = 1;
  for (int a = 0; a < dom.dim; ++a) out_pts *= dom.n + 2 * valid_out + 1;
  const double direct_cost = double(k.weight.size()) * double(out_pts) * f.components();
  if (direct_cost <= 2.0e8) {
    mollify_direct(f, k, out, valid_out);
  } else {
    mollify_fft(f, k, out);
  }
  return out;
}

// --- norms -------------------------------------------------------------------

double sup_norm(const GridField& f) {
  const Domain& dom = f.domain();
  double m = 0;
  for (int c = 0; c < f.components(); ++c) {
    const double* v = f.comp(c).data();
    visit_box(dom, dom.margin, dom.margin + dom.n,
              [&](long flat, const std::array<long, kMaxDim>&) { m = std::max(m, std::abs(v[flat])); });
  }
  return m;
}

static double spectral_at(const GridField& f, long flat) {
  const int d = f.domain().dim;
  if (d == 1) return std::abs(f.comp(0)[flat]);
  if (d == 2) {
    const double a = f.sym(0, 0, flat), b = f.sym(0, 1, flat), c = f.sym(1, 1, flat);
    const double tr = 0.5 * (a + c), disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return std::max(std::abs(tr + disc), std::abs(tr - disc));
  }
  Eigen::Matrix3d M;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) M(i, j) = f.sym(i, j, flat);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(M, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(2)));
}

double sup_spectral(const GridField& f) {
  if (f.kind() != FieldKind::symmatrix) throw config_error("sup_spectral needs a symmatrix field");
  const Domain& dom = f.domain();
  double m = 0;
  visit_box(dom, dom.margin, dom.margin + dom.n,
            [&](long flat, const std::array<long, kMaxDim>&) { m = std::max(m, spectral_at(f, flat)); });
  return m;
}

double min_eigenvalue(const GridField& f, long within, std::array<double, kMaxDim>* where) {
  if (f.kind() != FieldKind::symmatrix) throw config_error("min_eigenvalue needs a symmatrix field");
  const Domain& dom = f.domain();
  const int d = dom.dim;
  double m = std::numeric_limits<double>::infinity();
  std::array<long, kMaxDim> argmin{};
  const long lo = dom.margin - within, hi = dom.margin + dom.n + within;
  visit_box(dom, lo, hi, [&](long flat, const std::array<long, kMaxDim>& idx) {
    double lam;
    if (d == 1) {
      lam = f.comp(0)[flat];
    } else if (d == 2) {
      const double a = f.sym(0, 0, flat), b = f.sym(0, 1, flat), c = f.sym(1, 1, flat);
      lam = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    } else {
      Eigen::Matrix3d M;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M(i, j) = f.sym(i, j, flat);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
      es.computeDirect(M, Eigen::EigenvaluesOnly);
      lam = es.eigenvalues()(0);
    }
    if (lam < m) {
      m = lam;
      argmin = idx;
    }
  });
  if (where)
    for (int a = 0; a < d; ++a) (*where)[a] = dom.coord(argmin[a]);
  return m;
}

static void enumerate_multis(int d, int order, std::vector<std::array<int, kMaxDim>>& out) {
  std::array<int, kMaxDim> m{};
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == d - 1) {
      m[axis] = left;
      out.push_back(m);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      m[axis] = v;
      rec(axis + 1, left - v);
    }
  };
  rec(0, order);
}

double cm_norm(const GridField& f, int m) {
  double total = 0;
  const int d = f.domain().dim;
  for (int order = 0; order <= m; ++order) {
    std::vector<std::array<int, kMaxDim>> multis;
    enumerate_multis(d, order, multis);
    for (const auto& mu : multis) {
      GridField g = derivative(f, mu);
      // Euclidean magnitude over components, sup over interior.
      const Domain& dom = g.domain();
      double s = 0;
      visit_box(dom, dom.margin, dom.margin + dom.n, [&](long flat, const std::array<long, kMaxDim>&) {
        double v2 = 0;
        for (int c = 0; c < g.components(); ++c) v2 += g.comp(c)[flat] * g.comp(c)[flat];
        s = std::max(s, v2);
      });
      total += std::sqrt(s);
    }
  }
  return total;
}

HolderEstimate holder_norm(const GridField& f, int m, double alpha) {
  if (m > 2) throw config_error("holder_norm supports m <= 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw config_error("holder_norm needs alpha in (0,1]");
  const Domain& dom = f.domain();
  const int d = dom.dim;
  HolderEstimate est{m, alpha, cm_norm(f, m)};

  std::vector<std::array<int, kMaxDim>> multis;
  enumerate_multis(d, m, multis);
  std::vector<GridField> derivs;
  derivs.reserve(multis.size());
  for (const auto& mu : multis) derivs.push_back(derivative(f, mu));

  // Axis directions plus full diagonals (sign patterns with leading +).
  std::vector<std::array<int, kMaxDim>> dirs;
  for (int a = 0; a < d; ++a) {
    std::array<int, kMaxDim> e{};
    e[a] = 1;
    dirs.push_back(e);
  }
  if (d > 1) {
    for (int mask = 0; mask < (1 << (d - 1)); ++mask) {
      std::array<int, kMaxDim> e{};
      e[0] = 1;
      for (int a = 1; a < d; ++a) e[a] = (mask >> (a - 1)) & 1 ? -1 : 1;
      dirs.push_back(e);
    }
  }
  const double diam = std::sqrt(double(d));
  const auto st = dom.strides();
  double semi = 0;
  for (const auto& dir : dirs) {
    double dn2 = 0;
    for (int a = 0; a < d; ++a) dn2 += double(dir[a]) * dir[a];
    const double dirnorm = std::sqrt(dn2);
    for (long s = 1; s * dom.h * dirnorm <= diam / 4.0 && s <= dom.n; s *= 2) {
      long foff = 0;
      bool in_range = true;
      std::array<long, kMaxDim> lo{}, hi{};
      for (int a = 0; a < d; ++a) {
        foff += s * dir[a] * st[a];
        lo[a] = dom.margin + std::max<long>(0, -s * dir[a]);
        hi[a] = dom.margin + dom.n - std::max<long>(0, s * dir[a]);
        if (lo[a] > hi[a]) in_range = false;
      }
      if (!in_range) continue;
      const double dist_alpha = std::pow(s * dom.h * dirnorm, alpha);
      for (const auto& g : derivs) {
        for (int c = 0; c < g.components(); ++c) {
          const double* v = g.comp(c).data();
          // odometer over the shifted-pair box
          std::array<long, kMaxDim> idx = lo;
          long flat = 0;
          for (int a = 0; a < d; ++a) flat += lo[a] * st[a];
          while (true) {
            semi = std::max(semi, std::abs(v[flat + foff] - v[flat]) / dist_alpha);
            int a = d - 1;
            while (a >= 0) {
              if (idx[a] < hi[a]) {
                ++idx[a];
                flat += st[a];
                break;
              }
              flat -= (hi[a] - lo[a]) * st[a];
              idx[a] = lo[a];
              --a;
            }
            if (a < 0) break;
          }
        }
      }
    }
  }
  est.value += semi;
  return est;
}

// --- domain utilities ----------------------------------------------------------

namespace {
double smoothstep(double u) {  // C^inf, 0 at u<=0, 1 at u>=1
  auto q = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = q(u), b = q(1.0 - u);
  return a / (a + b);
}
}  // namespace

GridField extend_smooth(const GridField& f, long taper_cells) {
  const Domain& dom = f.domain();
  if (f.valid() < dom.margin) return extend_smooth(reextend(f), taper_cells);
  taper_cells = std::min(taper_cells, std::max<long>(dom.margin / 2, 1));
  // Per-axis cutoff: 1 out to (margin - taper) cells past the interior, then
  // decays to 0 at the pad boundary.
  std::vector<double> psi(dom.axis_points());
  for (long j = 0; j < dom.axis_points(); ++j) {
    const long depth = std::max(dom.margin - j, j - dom.margin - dom.n);  // cells beyond interior
    const long plateau = dom.margin - taper_cells;
    if (depth <= plateau)
      psi[j] = 1.0;
    else
      psi[j] = smoothstep(double(dom.margin - depth) / double(taper_cells));
  }
  GridField out = f;
  visit_box(dom, 0, dom.axis_points() - 1, [&](long flat, const std::array<long, kMaxDim>& idx) {
    double c = 1.0;
    for (int a = 0; a < dom.dim; ++a) c *= psi[idx[a]];
    for (int comp = 0; comp < out.components(); ++comp) out.comp(comp)[flat] *= c;
  });
  out.set_valid(dom.margin);
  return out;
}

GridField reextend(const GridField& f) {
  const Domain& dom = f.domain();
  if (f.valid() >= dom.margin) return f;
  GridField out = f;
  const long lo = dom.margin - f.valid(), hi = dom.margin + dom.n + f.valid();
  const auto st = dom.strides();
  visit_box(dom, 0, dom.axis_points() - 1, [&](long flat, const std::array<long, kMaxDim>& idx) {
    long src = 0;
    bool clamped = false;
    for (int a = 0; a < dom.dim; ++a) {
      long j = idx[a];
      if (j < lo) {
        j = lo;
        clamped = true;
      } else if (j > hi) {
        j = hi;
        clamped = true;
      }
      src += j * st[a];
    }
    if (clamped)
      for (int c = 0; c < out.components(); ++c) out.comp(c)[flat] = f.comp(c)[src];
  });
  out.set_valid(dom.margin);
  return out;
}

void subtract_linear_shift(GridField& w, double c) {
  if (w.kind() != FieldKind::vector || w.k() != w.domain().dim)
    throw config_error("linear shift applies to d-vector fields");
  const Domain& dom = w.domain();
  visit_box(dom, 0, dom.axis_points() - 1, [&](long flat, const std::array<long, kMaxDim>& idx) {
    for (int a = 0; a < dom.dim; ++a) w.comp(a)[flat] -= c * dom.coord(idx[a]);
  });
}

// --- I/O -------------------------------------------------------------------------

static void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                        (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void dump_field(const GridField& f, const std::string& path) {
  const Domain& dom = f.domain();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("cannot open " + path);
  os.write("MAFLD1", 6);
  put_u32(os, (uint32_t)dom.dim);
  put_u32(os, (uint32_t)f.components());
  for (int a = 0; a < dom.dim; ++a) put_u32(os, (uint32_t)(dom.n + 1));
  for (int c = 0; c < f.components(); ++c) {
    const double* v = f.comp(c).data();
    visit_box(dom, dom.margin, dom.margin + dom.n, [&](long flat, const std::array<long, kMaxDim>&) {
      os.write(reinterpret_cast<const char*>(&v[flat]), sizeof(double));
    });
  }
}

void write_norms_csv(const std::string& path,
                     const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot open " + path);
  os << "quantity,value\n";
  char buf[64];
  for (const auto& [name, v] : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << name << "," << buf << "\n";
  }
}

}  // namespace vkci
