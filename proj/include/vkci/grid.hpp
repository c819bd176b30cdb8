#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vkci/errors.hpp"

namespace vkci {

constexpr int kMaxDim = 4;

inline int sym_dim(int d) { return d * (d + 1) / 2; }

// Index of the (i,j) entry, i<=j, in canonical row-major upper-triangle order.
inline int sym_index(int d, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * d - i * (i - 1) / 2 + (j - i);
}

// Sampled functions live on the unit box (0,1)^d padded by `margin` cells per
// side. Point j along an axis sits at x = (j - margin)*h, h = 1/n; indices
// margin..margin+n are the closed interior.
struct Domain {
  int dim = 2;
  long n = 128;
  long margin = 32;
  double h = 1.0 / 128.0;

  Domain() = default;
  Domain(int d_, long n_, long margin_);

  long axis_points() const { return n + 2 * margin + 1; }
  long total_points() const;
  long interior_lo() const { return margin; }
  long interior_hi() const { return margin + n; }
  double coord(long idx) const { return (idx - margin) * h; }
  // Flat index strides, innermost axis = dim-1.
  std::array<long, kMaxDim> strides() const;
  bool operator==(const Domain& o) const {
    return dim == o.dim && n == o.n && margin == o.margin;
  }
};

enum class FieldKind { scalar, vector, symmatrix, curvature };

int component_count(FieldKind kind, int d, int k);

// Discrete C^{m,alpha} norm estimate.
struct HolderEstimate {
  int m = 0;
  double alpha = 1.0;
  double value = 0.0;
};

// Component-major storage of a sampled field. `valid` is the number of pad
// cells (beyond the interior) that still hold meaningful data; stencil and
// convolution ops shrink it.
class GridField {
 public:
  GridField() = default;
  GridField(const Domain& dom, FieldKind kind, int k);

  static GridField scalar(const Domain& dom) { return GridField(dom, FieldKind::scalar, 1); }
  static GridField vector(const Domain& dom, int k) { return GridField(dom, FieldKind::vector, k); }
  static GridField symmatrix(const Domain& dom) { return GridField(dom, FieldKind::symmatrix, dom.dim); }

  const Domain& domain() const { return dom_; }
  FieldKind kind() const { return kind_; }
  int k() const { return k_; }
  int components() const { return static_cast<int>(data_.size()); }
  long valid() const { return valid_; }
  void set_valid(long v) { valid_ = v; }

  std::vector<double>& comp(int c) { return data_[c]; }
  const std::vector<double>& comp(int c) const { return data_[c]; }

  double sym(int i, int j, long flat) const { return data_[sym_index(dom_.dim, i, j)][flat]; }
  double& sym(int i, int j, long flat) { return data_[sym_index(dom_.dim, i, j)][flat]; }

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(double s);

  void check_finite(const std::string& what) const;

 private:
  Domain dom_;
  FieldKind kind_ = FieldKind::scalar;
  int k_ = 1;
  long valid_ = 0;
  std::vector<std::vector<double>> data_;
};

// Visits every point with pad depth <= within (within = dom.margin visits the
// whole array). fn(flat, x) runs in row-major order.
void for_each_point(const Domain& dom, long within,
                    const std::function<void(long, const std::array<double, kMaxDim>&)>& fn);

// Row-major odometer over the sub-box [lo, hi] per axis (inclusive).
void for_each_index(const Domain& dom, long lo, long hi,
                    const std::function<void(long, const std::array<long, kMaxDim>&)>& fn);

GridField sample(const Domain& dom, FieldKind kind, int k,
                 const std::function<void(const std::array<double, kMaxDim>&, double*)>& f);

// --- derivatives -----------------------------------------------------------

// Centered 4th-order partial derivative; multi[a] = order along axis a,
// total order <= 4. Consumes stencil half-width cells of pad per axis.
GridField derivative(const GridField& f, const std::array<int, kMaxDim>& multi);
GridField derivative(const GridField& f, int axis, int order = 1);
long derivative_consumption(const std::array<int, kMaxDim>& multi);

// --- mollification ----------------------------------------------------------

// phi_l(x) = l^{-d} phi(x/l), phi(x) = c exp(-1/(1-|x|^2)) on |x|<1, discrete
// weights renormalized to unit sum. Requires 2h <= l <= valid*h. Switches to
// an FFT circular convolution for large kernels (identical weights).
GridField mollify(const GridField& f, double l);

// Max pad depth consumed by mollify at scale l.
long mollify_consumption(const Domain& dom, double l);

// --- norms ------------------------------------------------------------------

// Max over interior points and components of |value|.
double sup_norm(const GridField& f);

// Max over interior points of the spectral norm (symmatrix fields).
double sup_spectral(const GridField& f);

// Min over points with pad depth <= within of the smallest eigenvalue;
// argmin point copied to *where if given.
double min_eigenvalue(const GridField& f, long within, std::array<double, kMaxDim>* where = nullptr);

// C^m norm: sum over orders m'<=m of the max over all |gamma|=m' multi-indices
// (and components) of sup |d^gamma f| on the interior.
double cm_norm(const GridField& f, int m);

// C^{m,alpha}: cm_norm plus the max difference quotient of the order-m
// derivatives over axis/diagonal point pairs at dyadic separations in
// [h, diam/4].
HolderEstimate holder_norm(const GridField& f, int m, double alpha);

// --- domain utilities --------------------------------------------------------

// Multiplies by a smooth cutoff that is 1 on the interior (and on the pad
// plateau) and 0 at the pad boundary; result is valid on the whole pad.
GridField extend_smooth(const GridField& f, long taper_cells = 8);

// Restores full pad validity by replicating the outermost valid ring outward.
GridField reextend(const GridField& f);

// w(x) -= c * x (per-axis coordinate), used for the linear shifts of stages.
void subtract_linear_shift(GridField& w, double c);

// --- I/O ----------------------------------------------------------------------

// "MAFLD1" dump: little-endian u32 d, u32 components, u32 per-axis interior
// point counts, then f64 row-major interior values per component.
void dump_field(const GridField& f, const std::string& path);

void write_norms_csv(const std::string& path,
                     const std::vector<std::pair<std::string, double>>& rows);

}  // namespace vkci
