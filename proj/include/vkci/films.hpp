#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vkci/iteration.hpp"

namespace vkci {

// Prestrain: a smooth (d+k)x(d+k) symmetric field over the base domain,
// stored with the packed upper-triangle convention of sym_index(d+k, ., .).
struct Prestrain {
  int d = 2, k = 1;
  GridField data;  // vector field with (d+k)(d+k+1)/2 components

  int m() const { return d + k; }
  double at(int i, int j, long flat) const { return data.comp(sym_index(m(), i, j))[flat]; }
};

struct FilmConfig {
  int d = 2, k = 1;
  double gamma = 2.0;                          // prestrain exponent
  std::vector<double> hs = {0.2, 0.1, 0.05, 0.025};
  double alpha = 0.12;                         // Holder exponent used for (v, w)
  double t = 0.0;                              // 0 resolves to the default exponent
  int quad_z = 8;                              // Gauss points per z axis

  double resolved_t() const;                   // (2 - delta)/(2 alpha + 2), or ~0 when delta >= 2
};

// Recovery deformation u(x,z) = id + h^(d/2)[0;v_e] + h^d[w_e;0] + K(x) z,
// K = h^(d/2) K1 + h^d K2 + h^(3d/2) B with d = gamma/2.
struct Deformation {
  int d = 2, k = 1;
  double h = 0, delta = 0, eps = 0;
  GridField v_eps, w_eps;
  GridField zcoef;        // (d+k)*k components, row-major (r, b)
  GridField zcoef_grad;   // (d+k)*k*d components, (r, b, axis)
  GridField base_grad;    // (d+k)*d components (x-gradient of the z=0 part)
  GridField corr;         // the B block, (d+k)*k components
  long valid = 0;
};

Deformation build_recovery(const GridField& v, const GridField& w, const Prestrain& S, double h,
                           double gamma, double t);

// full (d+k)x(d+k) gradient of u at grid point `flat`, offset z
Eigen::MatrixXd deformation_gradient(const Deformation& defm, long flat,
                                     const Eigen::VectorXd& z);

// squared Frobenius distance to SO(m); throws on the reflection branch
double rotation_distance_sq(const Eigen::MatrixXd& F);

// averaged energy of the deformation against g^h = Id + 2 h^(gamma/2) S;
// optional pre-rotation composes Q with the deformation (rigid motion checks)
double film_energy(const Deformation& defm, const Prestrain& S, double gamma, int quad_z,
                   const Eigen::MatrixXd* pre_rotation = nullptr);

// VK solve with A = the d x d principal block of S (plus an identity shift
// absorbed into w); returns (v, w) and the solve report.
struct PrestrainSolve {
  GridField v, w;
  double exact_residual = 0;  // sup | content(v,w) - S_dxd |
  FlexibilityReport report;
};
PrestrainSolve solve_prestrain_vk(const Prestrain& S, double alpha,
                                  StageKind kind = StageKind::corrugation, double eps = 0.05);

struct ScanRow {
  double gamma = 0, h = 0, t = 0, energy = 0;
  int regime = 0;
  double predicted_beta = 0;
};

struct ScanResult {
  std::vector<ScanRow> rows;
  double fitted_slope = 0;
  double fit_curvature = 0;   // quadratic coefficient of the log-log fit
  double predicted_beta = 0;
  int regime = 0;             // 1, 2 or 3
};

// regime prediction for the scaling exponent, s = d(d+1)/k (1 when k >= d(d+1))
std::pair<int, double> scaling_regime(int d, int k, double gamma);

// energies of the recovery sequence over config.hs and the log-log fit;
// (v, w) must solve the VK system for the d x d block of S
ScanResult scaling_scan(const FilmConfig& config, const GridField& v, const GridField& w,
                        const Prestrain& S);

void write_scan_csv(const ScanResult& scan, const std::string& path);
std::string scan_to_json(const ScanResult& scan);

// smooth manufactured data: (v*, w*) plus a prestrain whose d x d block is
// exactly their stretching content
struct FilmData {
  GridField v, w;
  Prestrain S;
};
FilmData exact_prestrain_pair(const Domain& dom, int k);

}  // namespace vkci
