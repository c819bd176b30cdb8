#pragma once

#include <string>
#include <vector>

#include "vkci/grid.hpp"
#include "vkci/iteration.hpp"

namespace vkci {

// F : omega -> R^{d^4} with the curvature-tensor symmetries
//   F_{ij,st} = -F_{ji,st} = -F_{ij,ts} = F_{st,ij}
// held exactly by storing one value per canonical quadruple: index pairs
// i<j ordered lexicographically, quadruple (p,q) with p <= q over pair
// indices.
class CurvatureField {
 public:
  explicit CurvatureField(const Domain& dom);

  const Domain& domain() const { return dom_; }
  long valid() const { return valid_; }
  void set_valid(long v) { valid_ = v; }
  int pair_count() const { return (int)pairs_.size(); }
  int components() const { return (int)data_.size(); }
  std::pair<int, int> pair(int p) const { return pairs_[p]; }

  std::vector<double>& canon(int p, int q);              // p <= q pair indices
  const std::vector<double>& canon(int p, int q) const;

  // Full-symmetry accessor; zero on degenerate indices.
  double value(int i, int j, int s, int t, long flat) const;

  double sup() const;  // max |canonical components| over the interior
  GridField to_grid_field() const;

 private:
  Domain dom_;
  long valid_ = 0;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::vector<int>> pair_index_;  // [i][j] -> pair id (i<j)
  std::vector<std::vector<double>> data_;
};

// Second-order operator generalizing curl curl:
//   (C2 A)_{ij,st} = di ds A_jt + dj dt A_is - di dt A_js - dj ds A_it.
CurvatureField c2_operator(const GridField& A);

// <di ds v, dj dt v> - <di dt v, dj ds v> for a vector field v.
CurvatureField det_hessian(const GridField& v);

struct CompatibilityReport {
  double algebraic = 0;     // first Bianchi residual sup
  double differential = 0;  // differential Bianchi residual sup
};
CompatibilityReport check_compatibility(const CurvatureField& F);

// Inverts C2 on compatible data via staircase Poincare primitives on the box
// (integrals along grid lines, 4th-order cumulative rule). Throws when the
// compatibility residuals exceed tol.
GridField invert_c2(const CurvatureField& F, double tol = 1e-4);

// When C2(A) vanishes (within tol), builds w with sym grad w = A.
GridField kernel_certificate(const GridField& A, double tol = 1e-6);

struct WeakMAResult {
  GridField v, w;
  GridField A;            // inverted potential, before the identity shift
  double c_shift = 0;     // power-of-two multiple of Id added for positivity
  double vk_residual = 0; // sup | (A + C Id) - content(v, w + C x) | form
  double v_dist = 0;      // sup |v - v_target|
  FlexibilityReport flex;
};

// Density demonstration: solve Det grad^2 v = F near a continuous target.
WeakMAResult weak_ma_solve(const CurvatureField& F, const GridField& v_target, double eps,
                           double alpha, StageKind kind = StageKind::corrugation,
                           const NKParams* base_params = nullptr);

}  // namespace vkci
