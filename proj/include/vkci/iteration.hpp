#pragma once

#include <string>
#include <vector>

#include "vkci/stage.hpp"

namespace vkci {

enum class StageKind { corrugation, kallen };

struct NKParams {
  double alpha = 0.1;        // target Holder exponent
  double beta = 1.0;         // Holder exponent of A
  double gamma = 1.0;        // stage growth exponent (d*/k, or delta for Kallen)
  double delta_exp = 0.0;    // interpolation exponent; 0 = midpoint of the range
  double sigma = 8.0;
  int max_stages = 12;
  double tol_deficit = 1e-3;

  // throws config_error when alpha/delta fall outside the admissible range
  void validate() const;
  double resolved_delta() const;
};

struct NKTraceRow {
  int stage = 0;
  double deficit_sup = 0;
  double c1_incr = 0;
  double c1alpha_incr = 0;
  double hess_v = 0;
  double hess_w = 0;
  double M = 0;
  double sigma = 0;
};

enum class NKOutcome { converged, max_stages, stagnated, unresolvable };

struct NKResult {
  GridField v, w;
  std::vector<NKTraceRow> trace;
  NKOutcome outcome = NKOutcome::converged;
  std::string message;
  double final_deficit = 0;
};

void write_trace_csv(const std::vector<NKTraceRow>& trace, const std::string& path);

// Outer loop: repeated stages with measured M_i and fixed sigma until the
// deficit falls below tol or the budget runs out. Divergence and guard
// failures are reported in the outcome, with the trace attached.
NKResult nash_kuiper(const GridField& v, const GridField& w, const GridField& A,
                     const NKParams& params, StageKind kind);

// One sweep of plain corrugations with adaptively doubled frequencies:
// brings the deficit below eps while keeping it uniformly positive definite.
struct C1ReduceResult {
  GridField v, w;
  double deficit_out = 0;
  double min_eig_out = 0;
  int steps = 0;
};
C1ReduceResult c1_reduce_deficit(const GridField& v, const GridField& w, const GridField& A,
                                 double eps);

struct FlexibilityReport {
  double dv_sup = 0, dw_sup = 0;   // distance to the input pair
  double vk_residual = 0;          // sup of A - content at the end
  int nk_stages = 0;
  NKOutcome outcome = NKOutcome::converged;
  std::string message;
};

struct FlexibilityResult {
  GridField v, w;
  FlexibilityReport report;
};

// Three phases: smooth the data to eps^3 accuracy in C1, reduce the deficit
// to eps^3 with plain corrugations, then hand the residual to the outer loop.
FlexibilityResult flexibility_solve(const GridField& v, const GridField& w, const GridField& A,
                                    double eps, double alpha, StageKind kind,
                                    const NKParams* base_params = nullptr);

// Admissible alpha upper bound for dimension d, codimension k.
double alpha_limit(int d, int k, StageKind kind);

}  // namespace vkci
