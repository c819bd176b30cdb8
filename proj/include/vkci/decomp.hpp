#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vkci/grid.hpp"

namespace vkci {

// Rank-one frame for R^{dxd}_sym: d* = d(d+1)/2 unit vectors whose dyads span
// the space, a linear coefficient map inverting the dyad arrangement, and the
// positivity radius r0 around the identity.
struct PrimitiveFrame {
  int d = 1;
  std::vector<Eigen::VectorXd> etas;  // d* unit vectors
  Eigen::MatrixXd coeff;              // d* x d*, acts on packed (i<=j) entries
  double r0 = 0;

  int dstar() const { return (int)etas.size(); }
  Eigen::VectorXd coefficients(const Eigen::MatrixXd& A) const;
  Eigen::MatrixXd reconstruct(const Eigen::VectorXd& c) const;
  std::string to_json() const;
};

PrimitiveFrame build_primitive_frame(int d, unsigned long seed = 1220);

// coefficients of A in the frame; `positive` reports whether all entries
// clear r0/2 (guaranteed when ||A - Id||_2 <= r0).
Eigen::VectorXd decompose_near_identity(const PrimitiveFrame& frame, const Eigen::MatrixXd& A,
                                        bool* positive = nullptr);

// One chart of the positive-cone cover: ball around P in spectral norm with
// the congruence-conjugated frame.
struct PartitionChart {
  Eigen::MatrixXd center;
  double radius = 0;
  std::vector<Eigen::VectorXd> etas;     // unit directions of the conjugated dyads
  std::vector<double> dyad_scale;        // |P^{1/2} eta_i|^2 per direction
  Eigen::MatrixXd inv_sqrt_center;
};

struct PartitionFrame {
  int d = 1;
  PrimitiveFrame base;
  std::vector<PartitionChart> charts;
  int n0 = 0;  // max simultaneously active terms

  // smooth weights phi_m(A)^2 summing to 1 over charts containing A
  Eigen::VectorXd weights_squared(const Eigen::MatrixXd& A) const;
};

// Cover of the sampled range of a positive-definite field.
PartitionFrame build_partition_frame(const PrimitiveFrame& base, const GridField& D);

struct PositiveDecomposition {
  std::vector<Eigen::VectorXd> etas;
  std::vector<GridField> b;  // nonnegative scalar amplitudes, sum b_i^2 eta eta^T = D
  int n0 = 0;
};

// D(x) >= c_min Id required at every valid point; error names the first
// offending point otherwise.
PositiveDecomposition decompose_positive_field(const GridField& D, double c_min);

}  // namespace vkci
