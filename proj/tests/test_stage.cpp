#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include <filesystem>

#include "vkci/stage.hpp"

using namespace vkci;

namespace {

GridField const_sym(const Domain& dom, double diag) {
  GridField A = GridField::symmatrix(dom);
  for (int i = 0; i < dom.dim; ++i)
    for (long f = 0; f < dom.total_points(); ++f) A.sym(i, i, f) = diag;
  return A;
}

}  // namespace

TEST_CASE("frequency ladder: spec sequences") {
  // d=2 (d*=3), k=1: sigma/l, sigma^2/l, sigma^3/l
  {
    FrequencyLadder lad = frequency_ladder(3, 1, 4.0, 0.5);
    REQUIRE(lad.N == 3);
    CHECK(lad.S == 1);
    CHECK(lad.J == 3);
    CHECK(lad.lambdas[0] == doctest::Approx(4.0 / 0.5));
    CHECK(lad.lambdas[1] == doctest::Approx(16.0 / 0.5));
    CHECK(lad.lambdas[2] == doctest::Approx(64.0 / 0.5));
  }
  // d=2 (d*=3), k=3: constant ladder sigma/l
  {
    FrequencyLadder lad = frequency_ladder(3, 3, 9.0, 0.25);
    REQUIRE(lad.N == 3);
    CHECK(lad.S == 1);
    CHECK(lad.J == 1);
    for (int i = 0; i < 3; ++i) CHECK(lad.lambdas[i] == doctest::Approx(36.0));
    for (int i = 0; i < 3; ++i) CHECK(lad.twice_exponent[i] == 2);
  }
  // d=1, k=1: single frequency sigma/l
  {
    FrequencyLadder lad = frequency_ladder(1, 1, 8.0, 1.0);
    REQUIRE(lad.N == 1);
    CHECK(lad.lambdas[0] == doctest::Approx(8.0));
  }
  // d=1, k=2: exponents 1 and 3/2
  {
    FrequencyLadder lad = frequency_ladder(1, 2, 16.0, 1.0);
    REQUIRE(lad.N == 2);
    CHECK(lad.twice_exponent[0] == 2);
    CHECK(lad.twice_exponent[1] == 3);
    CHECK(lad.lambdas[1] == doctest::Approx(8.0));  // (sigma^(1/2))^(3/2)
  }
  CHECK_THROWS_AS(frequency_ladder(3, 1, 0.5, 0.5), precondition_error);
  // non-decreasing
  FrequencyLadder lad = frequency_ladder(6, 2, 5.0, 0.3);
  for (size_t i = 1; i < lad.lambdas.size(); ++i) CHECK(lad.lambdas[i] >= lad.lambdas[i - 1]);
}

TEST_CASE("corrugation stage d=k=1: contraction and exact telescoping") {
  Domain dom(1, 512, 280);
  GridField v = sample(dom, FieldKind::vector, 1,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         o[0] = 0.02 * std::sin(2 * M_PI * x[0]);
                       });
  GridField w(dom, FieldKind::vector, 1);
  GridField A = sample(dom, FieldKind::symmatrix, 1,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         o[0] = 0.2 + 0.04 * std::sin(2 * M_PI * x[0]);
                       });
  double prev = 1e9;
  for (double sigma : {2.0, 4.0, 8.0}) {
    StageResult r = stage_corrugation(v, w, A, 1.0, sigma);
    CHECK(r.report.deficit_out < r.report.deficit_in);
    CHECK(r.report.deficit_out < prev + 1e-12);
    CHECK(r.report.telescope_residual <= 1e-6 * r.report.deficit_in);
    CHECK(r.report.c_deficit < 50.0);
    CHECK(r.report.c_incr_v < 50.0);
    CHECK(r.report.c_incr_w < 50.0);
    prev = r.report.deficit_out;
  }
}

TEST_CASE("stage can dump every intermediate field pair") {
  Domain dom(1, 256, 150);
  GridField v(dom, FieldKind::vector, 1);
  GridField w(dom, FieldKind::vector, 1);
  GridField A = const_sym(dom, 0.25);
  std::filesystem::create_directories("/tmp/vkci_stage_dump");
  StageOptions opts;
  opts.dump_dir = "/tmp/vkci_stage_dump";
  stage_corrugation(v, w, A, 1.0, 2.0, opts);
  CHECK(std::filesystem::exists("/tmp/vkci_stage_dump/v_1.fld"));
  CHECK(std::filesystem::exists("/tmp/vkci_stage_dump/w_1.fld"));
}

TEST_CASE("corrugation stage: constant data collapses to stencil noise in one stage") {
  Domain dom(1, 512, 280);
  GridField v(dom, FieldKind::vector, 1);
  GridField w(dom, FieldKind::vector, 1);
  GridField A = const_sym(dom, 0.25);
  StageResult r = stage_corrugation(v, w, A, 1.0, 2.0);
  // grad a = 0 and hess v0 = 0 kill every continuum error term
  CHECK(r.report.deficit_out < 1e-6);
  CHECK(r.report.telescope_residual <= 1e-6 * r.report.deficit_in);
}

TEST_CASE("corrugation stage d=2 k=3: runs, contracts, reports") {
  Domain dom(2, 96, 64);
  GridField v(dom, FieldKind::vector, 3);
  GridField w(dom, FieldKind::vector, 2);
  GridField A = sample(dom, FieldKind::symmatrix, 2,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         const double s = 0.18 + 0.02 * std::cos(2 * M_PI * x[0]);
                         o[0] = s;      // (0,0)
                         o[1] = 0.0;    // (0,1)
                         o[2] = s;      // (1,1)
                       });
  StageResult r = stage_corrugation(v, w, A, 1.0, 4.0);
  CHECK(r.report.N == 3);
  CHECK(r.report.deficit_out < r.report.deficit_in / 1.5);
  CHECK(r.report.telescope_residual <= 1e-6 * r.report.deficit_in);
  CHECK(r.report.hess_v > 0);
  CHECK(r.report.to_json().find("telescope_residual") != std::string::npos);
  CHECK(r.report.ctilde.size() == 1);
  CHECK(r.report.amp_sup.size() == 3);
}

TEST_CASE("stage preconditions and the resolvability guard") {
  Domain dom(1, 128, 70);
  GridField v(dom, FieldKind::vector, 1);
  GridField w(dom, FieldKind::vector, 1);

  GridField zero = const_sym(dom, 0.0);
  CHECK_THROWS_AS(stage_corrugation(v, w, zero, 1.0, 4.0), precondition_error);

  GridField big = const_sym(dom, 1.5);
  CHECK_THROWS_AS(stage_corrugation(v, w, big, 1.0, 4.0), precondition_error);

  GridField ok = const_sym(dom, 0.25);
  GridField vbig = sample(dom, FieldKind::vector, 1,
                          [](const std::array<double, kMaxDim>& x, double* o) {
                            o[0] = std::sin(4 * M_PI * x[0]);
                          });
  CHECK_THROWS_AS(stage_corrugation(vbig, w, ok, 1.0, 4.0), precondition_error);  // M too small

  // lambda_N h > 0.5: sigma far beyond what n=128 resolves
  CHECK_THROWS_AS(stage_corrugation(v, w, ok, 1.0, 4096.0), resolvability_error);
}

TEST_CASE("Kallen stage d=1 k=2: error-field decay and contraction") {
  Domain dom(1, 512, 160);
  GridField v = sample(dom, FieldKind::vector, 2,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         o[0] = 0.05 * std::sin(2 * M_PI * x[0]);
                         o[1] = 0.05 * std::cos(2 * M_PI * x[0]);
                       });
  GridField w(dom, FieldKind::vector, 1);
  GridField A = sample(dom, FieldKind::symmatrix, 1,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         o[0] = 0.22 + 0.04 * std::sin(2 * M_PI * x[0]);
                       });
  const double M = std::max({cm_norm(v, 2), cm_norm(w, 2), 1.0});
  const double sigma = 8.0, delta = 0.25;
  StageResult r = stage_kallen(v, w, A, M, sigma, delta);
  CHECK(r.report.N == 4);
  CHECK(r.report.err_diff.size() == 4);
  const double ll = std::pow(sigma, 1.0 / 4.0);
  for (size_t i = 1; i < r.report.err_diff.size(); ++i) {
    if (r.report.err_diff[i - 1] > 1e-14)
      CHECK(r.report.err_diff[i] / r.report.err_diff[i - 1] <= 2.0 / ll);
  }
  CHECK(r.report.deficit_out < r.report.deficit_in);

  // codimension gate
  GridField v1(dom, FieldKind::vector, 1);
  CHECK_THROWS_AS(stage_kallen(v1, w, A, 1.0, sigma, delta), precondition_error);
}

TEST_CASE("corrugation stage d=2 k=2: two sub-stages, exact telescoping") {
  // N = 6 = 2 d*, so the block deficit is re-decomposed once mid-stage and
  // the ladder uses the half-step exponents
  Domain dom(2, 128, 160);
  GridField v(dom, FieldKind::vector, 2);
  GridField w(dom, FieldKind::vector, 2);
  GridField A = sample(dom, FieldKind::symmatrix, 2,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         const double s = 0.93 + 0.02 * std::cos(2 * M_PI * x[0]);
                         o[0] = s;
                         o[1] = 0.0;
                         o[2] = s;
                       });
  StageResult r = stage_corrugation(v, w, A, 1.0, 4.0);
  CHECK(r.report.N == 6);
  CHECK(r.report.S == 2);
  CHECK(r.report.ctilde.size() == 2);
  CHECK(r.report.telescope_residual <= 1e-6 * r.report.deficit_in);
  // each block scales the residual by ~C/(lambda l) with (lambda l) =
  // sigma^(1/2); at resolvable sigma this grows, so only the bookkeeping
  // is asserted here
  CHECK(std::isfinite(r.report.deficit_out));
}

TEST_CASE("corrugation stage d=3 smoke: contracts with exact telescoping") {
  Domain dom(3, 32, 44);
  GridField v(dom, FieldKind::vector, 6);
  GridField w(dom, FieldKind::vector, 3);
  GridField A = GridField::symmatrix(dom);
  for_each_point(dom, dom.margin, [&](long flat, const std::array<double, kMaxDim>& x) {
    const double s = 0.22 + 0.02 * std::cos(2 * M_PI * x[0]);
    for (int i = 0; i < 3; ++i) A.sym(i, i, flat) = s;
  });
  StageResult r = stage_corrugation(v, w, A, 1.0, 4.0);
  CHECK(r.report.N == 6);
  CHECK(r.report.telescope_residual <= 1e-6 * r.report.deficit_in);
  CHECK(r.report.deficit_out < r.report.deficit_in);
}

TEST_CASE("Kallen stage d=2 k=12: growth slope stays near delta") {
  Domain dom(2, 96, 76);
  GridField v(dom, FieldKind::vector, 12);
  GridField w(dom, FieldKind::vector, 2);
  GridField A = sample(dom, FieldKind::symmatrix, 2,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         const double s = 0.22 + 0.02 * std::cos(2 * M_PI * x[0]);
                         o[0] = s;
                         o[1] = 0.0;
                         o[2] = s;
                       });
  const double h2 = stage_kallen(v, w, A, 1.0, 2.0, 0.25).report.hess_v;
  const double h16 = stage_kallen(v, w, A, 1.0, 16.0, 0.25).report.hess_v;
  const double slope = std::log(h16 / h2) / std::log(8.0);
  CHECK(slope <= 0.35);
}

TEST_CASE("kallen_sigma0 doubling finds an admissible sigma") {
  Domain dom(1, 256, 160);
  GridField v(dom, FieldKind::vector, 2);
  GridField w(dom, FieldKind::vector, 1);
  GridField A = const_sym(dom, 0.25);
  const double s0 = kallen_sigma0(v, w, A, 1.0, 0.5, 2.0);
  CHECK(s0 >= 2.0);
  StageResult r = stage_kallen(v, w, A, 1.0, s0, 0.5);
  CHECK(r.report.deficit_out < r.report.deficit_in);
}

TEST_CASE("cross-validation: one-iteration Kallen and d*=k corrugation contract alike") {
  Domain dom(1, 512, 280);
  GridField w(dom, FieldKind::vector, 1);
  GridField A = sample(dom, FieldKind::symmatrix, 1,
                       [](const std::array<double, kMaxDim>& x, double* o) {
                         o[0] = 0.2 + 0.04 * std::sin(2 * M_PI * x[0]);
                       });
  auto corr_def = [&](double sigma) {
    GridField v(dom, FieldKind::vector, 1);
    return stage_corrugation(v, w, A, 1.0, sigma).report.deficit_out;
  };
  auto kall_def = [&](double sigma) {
    GridField v(dom, FieldKind::vector, 2);
    return stage_kallen(v, w, A, 1.0, sigma, 1.0, 1).report.deficit_out;
  };
  const double rc = corr_def(16.0) / corr_def(4.0);
  const double rk = kall_def(16.0) / kall_def(4.0);
  // both behave like 1/sigma up to constants
  CHECK(std::abs(std::log(rc / rk)) < std::log(3.5));
}
