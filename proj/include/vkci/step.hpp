#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "vkci/grid.hpp"

namespace vkci {

// Periodic profiles. The corrugation triple satisfies (1/2)G'^2 + Gdd' = 1 and
// G'G - Gb' + 2Gdd = 0; the spiral pair satisfies G^2 + Gb^2 = 1.
struct StepProfile {
  static double gamma(double t) { return 2.0 * std::sin(t); }
  static double gamma_bar(double t) { return -0.5 * std::cos(2.0 * t); }
  static double gamma_dbar(double t) { return -0.5 * std::sin(2.0 * t); }
  static double g(double t) { return std::sin(t); }
  static double g_bar(double t) { return std::cos(t); }
};

// One corrugation: amplitude field, oscillation direction in the base, target
// codimension axis, frequency.
struct StepSpec {
  GridField amplitude;   // scalar
  Eigen::VectorXd eta;   // unit vector in R^d
  Eigen::VectorXd E;     // unit vector in R^k
  double lambda = 1.0;
};

struct SpiralSpec {
  GridField amplitude;
  Eigen::VectorXd eta;       // unit vector in R^d
  Eigen::VectorXd E1, E2;    // orthonormal pair in R^k
  double lambda = 1.0;
};

// (1/2)(grad v)^T grad v + sym grad w, the stretching content of (v, w).
GridField stretching_content(const GridField& v, const GridField& w);

// A - stretching_content(v, w).
GridField deficit(const GridField& A, const GridField& v, const GridField& w);

std::pair<GridField, GridField> corrugation_step(const GridField& v, const GridField& w,
                                                 const StepSpec& spec);

// Difference between the measured content increment minus a^2 eta eta^T and
// the closed-form error terms; a pure discretization residual.
GridField corrugation_residual(const GridField& v, const GridField& w, const GridField& vt,
                               const GridField& wt, const StepSpec& spec);

std::pair<GridField, GridField> multi_corrugation_step(const GridField& v, const GridField& w,
                                                       const std::vector<StepSpec>& specs);

GridField multi_corrugation_residual(const GridField& v, const GridField& w, const GridField& vt,
                                     const GridField& wt, const std::vector<StepSpec>& specs);

std::pair<GridField, GridField> spiral_step(const GridField& v, const GridField& w,
                                            const SpiralSpec& spec);

GridField spiral_residual(const GridField& v, const GridField& w, const GridField& vt,
                          const GridField& wt, const SpiralSpec& spec);

// Simultaneous spirals along e_i / e_{dstar+i}; needs k >= 2 dstar.
std::pair<GridField, GridField> multi_spiral_step(const GridField& v, const GridField& w,
                                                  const std::vector<GridField>& amplitudes,
                                                  const std::vector<Eigen::VectorXd>& etas,
                                                  double lambda);

// Closed-form error field of the simultaneous spiral update around the fields
// whose component Hessians are supplied:
//   -(1/lambda) sum_i a_i (G(l t_i) H_i + Gb(l t_i) H_{dstar+i})
//   + (1/(2 lambda^2)) sum_i grad a_i (x) grad a_i.
GridField multi_spiral_error(const std::vector<GridField>& amplitudes,
                             const std::vector<Eigen::VectorXd>& etas, double lambda,
                             const std::vector<GridField>& hessians);

GridField multi_spiral_residual(const GridField& v, const GridField& w, const GridField& vt,
                                const GridField& wt, const std::vector<GridField>& amplitudes,
                                const std::vector<Eigen::VectorXd>& etas, double lambda);

}  // namespace vkci
