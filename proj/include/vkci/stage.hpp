#pragma once

#include <string>
#include <vector>

#include "vkci/decomp.hpp"
#include "vkci/step.hpp"

namespace vkci {

// Graded frequencies of one corrugation stage. N = lcm(d*, k) = S d* = J k;
// lambda_i * l = (lambda l)^(te_i / 2) with integer te_i, lambda l = sigma^(1/S).
struct FrequencyLadder {
  int d_star = 1, k = 1, N = 1, S = 1, J = 1;
  double sigma = 1, l = 1;
  double lambda_base = 1;            // sigma^(1/S) / l
  std::vector<double> lambdas;       // lambda_1 .. lambda_N
  std::vector<int> twice_exponent;   // te_i
};

FrequencyLadder frequency_ladder(int d_star, int k, double sigma, double l);

struct StageReport {
  int N = 0, S = 0, J = 0;
  double sigma = 0, M = 0, l = 0, lambda_max = 0;
  double deficit_in = 0, deficit_out = 0;
  double dv_c1 = 0, dw_c1 = 0;        // C1 norms of the increments
  double hess_v = 0, hess_w = 0;      // sup of second derivatives of the outputs
  double grad_v_in = 0;
  // measured constants of the three stage bounds
  double c_incr_v = 0, c_incr_w = 0, c_hess_v = 0, c_deficit = 0;
  double telescope_residual = 0;      // corrugation stage: exact reconstruction check
  std::vector<double> ctilde;         // per sub-stage shift constants
  std::vector<double> deficit_s;      // per sub-stage combined deficits
  std::vector<double> amp_sup;        // per step amplitude sups
  std::vector<double> err_diff;       // Kallen: ||E_r - E_{r-1}||_0 sequence
  std::string to_json() const;
};

struct StageOptions {
  double beta = 1.0;       // Holder exponent of A used in the reported constants
  std::string dump_dir;    // when nonempty, intermediate fields are dumped there
};

struct StageResult {
  GridField v, w;
  StageReport report;
};

// Pad cells a corrugation stage consumes beyond the mollification radius.
long stage_pad_requirement(int d, int k, double deficit_sup, double M, const Domain& dom);

// Mollify at l = ||D||^(1/2)/M, then run N graded corrugations, recomputing
// the primitive decomposition of the accumulated deficit at each multiple of
// d*, and absorb the shifts into w.
StageResult stage_corrugation(const GridField& v, const GridField& w, const GridField& A,
                              double M, double sigma, const StageOptions& opts = {});

// Spiral stage at a single frequency sigma^(1/N)/l with Newton-like amplitude
// refinement against the closed-form error field. Needs k >= d(d+1).
StageResult stage_kallen(const GridField& v, const GridField& w, const GridField& A, double M,
                         double sigma, double delta, int n_iters = 0,
                         const StageOptions& opts = {});

// Doubling search for the smallest sigma whose Kallen run keeps every error
// field below the positivity budget.
double kallen_sigma0(const GridField& v, const GridField& w, const GridField& A, double M,
                     double delta, double sigma_start = 2.0);

}  // namespace vkci
