#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "vkci/step.hpp"

using namespace vkci;

namespace {

Eigen::VectorXd unit(std::initializer_list<double> v) {
  Eigen::VectorXd e(v.size());
  int i = 0;
  for (double x : v) e(i++) = x;
  return e / e.norm();
}

GridField const_scalar(const Domain& dom, double c) {
  return sample(dom, FieldKind::scalar, 1,
                [c](const std::array<double, kMaxDim>&, double* o) { o[0] = c; });
}

double max_entry(const GridField& f) { return sup_norm(f); }

}  // namespace

TEST_CASE("profile identities hold to 1e-14 over 1e4 samples") {
  double r1 = 0, r2 = 0, r3 = 0, r4 = 0;
  for (int i = 0; i < 10000; ++i) {
    const double t = -18.0 + 36.0 * i / 9999.0;
    const double dG = 2.0 * std::cos(t);            // gamma'
    const double dGb = std::sin(2 * t);             // gamma_bar'
    const double dGd = -std::cos(2 * t);            // gamma_dbar'
    r1 = std::max(r1, std::abs(0.5 * dG * dG + dGd - 1.0));
    r2 = std::max(r2, std::abs(dG * StepProfile::gamma(t) - dGb + 2 * StepProfile::gamma_dbar(t)));
    r3 = std::max(r3, std::abs(0.5 * StepProfile::gamma(t) * StepProfile::gamma(t) -
                               StepProfile::gamma_bar(t) - (1.0 - 0.5 * std::cos(2 * t))));
    r4 = std::max(r4, std::abs(StepProfile::g(t) * StepProfile::g(t) +
                               StepProfile::g_bar(t) * StepProfile::g_bar(t) - 1.0));
  }
  CHECK(r1 <= 1e-14);
  CHECK(r2 <= 1e-14);
  CHECK(r3 <= 1e-14);
  CHECK(r4 <= 1e-14);
  // 0.5*gamma(0)^2 - gamma_bar(0) = 1/2
  CHECK(0.5 * StepProfile::gamma(0) * StepProfile::gamma(0) - StepProfile::gamma_bar(0) ==
        doctest::Approx(0.5));
}

TEST_CASE("zero amplitude is the identity") {
  Domain dom(2, 32, 10);
  GridField v = sample(dom, FieldKind::vector, 1, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = std::sin(x[0] + 2 * x[1]);
  });
  GridField w = sample(dom, FieldKind::vector, 2, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = x[0] * x[1];
    o[1] = x[1];
  });
  StepSpec s{const_scalar(dom, 0.0), unit({1, 0}), unit({1}), 7.0};
  auto [vt, wt] = corrugation_step(v, w, s);
  GridField dv = vt;
  dv -= v;
  GridField dw = wt;
  dw -= w;
  CHECK(max_entry(dv) == 0.0);
  CHECK(max_entry(dw) == 0.0);
  GridField R = corrugation_residual(v, w, vt, wt, s);
  CHECK(max_entry(R) < 1e-12);
}

TEST_CASE("explicit 1-d corrugation, a=1, lambda=2pi") {
  Domain dom(1, 256, 10);
  GridField v(dom, FieldKind::vector, 1);
  GridField w(dom, FieldKind::vector, 1);
  StepSpec s{const_scalar(dom, 1.0), unit({1}), unit({1}), 2 * M_PI};
  auto [vt, wt] = corrugation_step(v, w, s);
  double ev = 0, ew = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>& x) {
    ev = std::max(ev, std::abs(vt.comp(0)[flat] - std::sin(2 * M_PI * x[0]) / M_PI));
    ew = std::max(ew, std::abs(wt.comp(0)[flat] + std::sin(4 * M_PI * x[0]) / (4 * M_PI)));
  });
  CHECK(ev < 1e-12);
  CHECK(ew < 1e-12);
}

TEST_CASE("constant amplitude, linear v: deficit increment is exactly a^2 eta eta^T") {
  Domain dom(2, 128, 10);
  GridField v = sample(dom, FieldKind::vector, 1, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = 0.3 * x[0] - 0.2 * x[1];
  });
  GridField w(dom, FieldKind::vector, 2);
  const double a0 = 0.7;
  Eigen::VectorXd eta = unit({0.6, 0.8});
  StepSpec s{const_scalar(dom, a0), eta, unit({1}), 1.0};
  auto [vt, wt] = corrugation_step(v, w, s);
  GridField inc = stretching_content(vt, wt);
  inc -= stretching_content(v, w);
  double err = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    for (int p = 0; p < 2; ++p)
      for (int q = p; q < 2; ++q)
        err = std::max(err, std::abs(inc.sym(p, q, flat) - a0 * a0 * eta(p) * eta(q)));
  });
  CHECK(err < 1e-8);
}

TEST_CASE("corrugation matches the closed-form update on polynomial data") {
  Domain dom(2, 64, 10);
  auto vf = [](double x, double y) { return 0.2 * x * x + 0.1 * x * y - 0.3 * y * y; };
  auto dvx = [](double x, double y) { return 0.4 * x + 0.1 * y; };
  auto dvy = [](double x, double y) { return 0.1 * x - 0.6 * y; };
  auto af = [](double x, double y) { return 0.5 + 0.2 * x + 0.1 * y * y; };
  auto dax = [](double, double) { return 0.2; };
  auto day = [](double, double y) { return 0.2 * y; };
  GridField v = sample(dom, FieldKind::vector, 1, [&](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = vf(x[0], x[1]);
  });
  GridField w = sample(dom, FieldKind::vector, 2, [&](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = 0.1 * x[0];
    o[1] = -0.2 * x[1] * x[0];
  });
  GridField a = sample(dom, FieldKind::scalar, 1, [&](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = af(x[0], x[1]);
  });
  Eigen::VectorXd eta = unit({1, 1});
  const double l = 10.0;
  StepSpec s{a, eta, unit({1}), l};
  auto [vt, wt] = corrugation_step(v, w, s);

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const long i = dom.margin + (long)(rng() % (dom.n + 1));
    const long j = dom.margin + (long)(rng() % (dom.n + 1));
    const long flat = i * dom.axis_points() + j;
    const double x = dom.coord(i), y = dom.coord(j);
    const double t = l * (eta(0) * x + eta(1) * y);
    const double av = af(x, y);
    const double want_v = vf(x, y) + (av / l) * StepProfile::gamma(t);
    CHECK(vt.comp(0)[flat] == doctest::Approx(want_v).epsilon(1e-12));
    const double wx = 0.1 * x - (av / l) * StepProfile::gamma(t) * dvx(x, y) -
                      (av / (l * l)) * StepProfile::gamma_bar(t) * dax(x, y) +
                      (av * av / l) * StepProfile::gamma_dbar(t) * eta(0);
    const double wy = -0.2 * x * y - (av / l) * StepProfile::gamma(t) * dvy(x, y) -
                      (av / (l * l)) * StepProfile::gamma_bar(t) * day(x, y) +
                      (av * av / l) * StepProfile::gamma_dbar(t) * eta(1);
    CHECK(wt.comp(0)[flat] == doctest::Approx(wx).epsilon(1e-11));
    CHECK(wt.comp(1)[flat] == doctest::Approx(wy).epsilon(1e-11));
  }
}

TEST_CASE("step residual shrinks 4th order under refinement") {
  auto residual_at = [](long n) {
    Domain dom(2, n, 12);
    GridField v = sample(dom, FieldKind::vector, 1, [](const std::array<double, kMaxDim>& x, double* o) {
      o[0] = x[0] * x[0];
    });
    GridField w(dom, FieldKind::vector, 2);
    GridField a = sample(dom, FieldKind::scalar, 1, [](const std::array<double, kMaxDim>& x, double* o) {
      o[0] = std::sin(2 * M_PI * x[1]);
    });
    StepSpec s{a, unit({1, 0}), unit({1}), 8 * M_PI};
    auto [vt, wt] = corrugation_step(v, w, s);
    return sup_norm(corrugation_residual(v, w, vt, wt, s));
  };
  const double r128 = residual_at(128), r256 = residual_at(256);
  const double slope = std::log(r256 / r128) / std::log(2.0);
  CHECK(slope < -3.5);
  CHECK(slope > -4.7);
}

TEST_CASE("multi corrugation reductions") {
  Domain dom(2, 48, 10);
  GridField v = sample(dom, FieldKind::vector, 2, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = 0.1 * std::sin(x[0]);
    o[1] = 0.2 * x[1];
  });
  GridField w(dom, FieldKind::vector, 2);
  GridField a1 = sample(dom, FieldKind::scalar, 1, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = 0.4 + 0.1 * x[0];
  });
  StepSpec s1{a1, unit({1, 0}), unit({1, 0}), 9.0};
  StepSpec s2{const_scalar(dom, 0.0), unit({0, 1}), unit({0, 1}), 11.0};

  auto [mv, mw] = multi_corrugation_step(v, w, {s1});
  auto [cv, cw] = corrugation_step(v, w, s1);
  GridField dv = mv;
  dv -= cv;
  GridField dw = mw;
  dw -= cw;
  CHECK(max_entry(dv) < 1e-14);
  CHECK(max_entry(dw) < 1e-14);

  auto [mv2, mw2] = multi_corrugation_step(v, w, {s1, s2});
  dv = mv2;
  dv -= cv;
  dw = mw2;
  dw -= cw;
  CHECK(max_entry(dv) < 1e-14);
  CHECK(max_entry(dw) < 1e-14);

  StepSpec bad = s2;
  bad.E = unit({1, 0.1});
  CHECK_THROWS_AS(multi_corrugation_step(v, w, {s1, bad}), precondition_error);
}

TEST_CASE("two simultaneous corrugations add their rank-one targets") {
  Domain dom(2, 128, 10);
  GridField v = sample(dom, FieldKind::vector, 2, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = 0.25 * x[0];
    o[1] = -0.15 * x[1] + 0.05 * x[0];
  });
  GridField w(dom, FieldKind::vector, 2);
  Eigen::VectorXd eta1 = unit({1, 0}), eta2 = unit({1, 2});
  StepSpec s1{const_scalar(dom, 0.6), eta1, unit({1, 0}), 1.0};
  StepSpec s2{const_scalar(dom, 0.5), eta2, unit({0, 1}), 1.3};
  auto [vt, wt] = multi_corrugation_step(v, w, {s1, s2});
  GridField inc = stretching_content(vt, wt);
  inc -= stretching_content(v, w);
  double err = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    for (int p = 0; p < 2; ++p)
      for (int q = p; q < 2; ++q) {
        const double want = 0.36 * eta1(p) * eta1(q) + 0.25 * eta2(p) * eta2(q);
        err = std::max(err, std::abs(inc.sym(p, q, flat) - want));
      }
  });
  CHECK(err < 1e-8);
  GridField R = multi_corrugation_residual(v, w, vt, wt, {s1, s2});
  CHECK(sup_norm(R) < 1e-8);
}

TEST_CASE("spiral step: constant amplitude cancels exactly half a^2") {
  Domain dom(2, 128, 10);
  GridField v = sample(dom, FieldKind::vector, 2, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = 0.2 * x[0];
    o[1] = 0.1 * x[1];
  });
  GridField w(dom, FieldKind::vector, 2);
  Eigen::VectorXd eta = unit({0.8, -0.6});
  SpiralSpec s{const_scalar(dom, 0.9), eta, unit({1, 0}), unit({0, 1}), 1.0};
  auto [vt, wt] = spiral_step(v, w, s);
  GridField inc = stretching_content(vt, wt);
  inc -= stretching_content(v, w);
  double err = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    for (int p = 0; p < 2; ++p)
      for (int q = p; q < 2; ++q)
        err = std::max(err, std::abs(inc.sym(p, q, flat) - 0.5 * 0.81 * eta(p) * eta(q)));
  });
  CHECK(err < 1e-8);

  GridField v1(dom, FieldKind::vector, 1);
  GridField w1(dom, FieldKind::vector, 2);
  CHECK_THROWS_AS(spiral_step(v1, w1, s), precondition_error);

  // zero amplitude: identity
  SpiralSpec z{const_scalar(dom, 0.0), eta, unit({1, 0}), unit({0, 1}), 3.0};
  auto [zv, zw] = spiral_step(v, w, z);
  GridField dv = zv;
  dv -= v;
  CHECK(max_entry(dv) == 0.0);
}

TEST_CASE("spiral residual 4th order under refinement") {
  auto residual_at = [](long n) {
    Domain dom(2, n, 12);
    GridField v = sample(dom, FieldKind::vector, 2, [](const std::array<double, kMaxDim>& x, double* o) {
      o[0] = 0.3 * x[0] * x[0];
      o[1] = 0.2 * x[1] * x[0];
    });
    GridField w(dom, FieldKind::vector, 2);
    GridField a = sample(dom, FieldKind::scalar, 1, [](const std::array<double, kMaxDim>& x, double* o) {
      o[0] = std::cos(2 * M_PI * x[0]);
    });
    SpiralSpec s{a, unit({1, 0}), unit({1, 0}), unit({0, 1}), 8 * M_PI};
    auto [vt, wt] = spiral_step(v, w, s);
    return sup_norm(spiral_residual(v, w, vt, wt, s));
  };
  const double r128 = residual_at(128), r256 = residual_at(256);
  const double slope = std::log(r256 / r128) / std::log(2.0);
  CHECK(slope < -3.5);
  CHECK(slope > -4.7);
}

TEST_CASE("multi spiral reductions and exact increment") {
  Domain dom(2, 96, 10);
  const int ds = 3, k = 6;
  GridField v = sample(dom, FieldKind::vector, k, [&](const std::array<double, kMaxDim>& x, double* o) {
    for (int c = 0; c < k; ++c) o[c] = 0.05 * (c + 1) * x[c % 2];
  });
  GridField w(dom, FieldKind::vector, 2);
  std::vector<Eigen::VectorXd> etas = {unit({1, 0}), unit({0, 1}), unit({1, 1})};

  // all-zero amplitudes: identity
  std::vector<GridField> zero(ds, const_scalar(dom, 0.0));
  auto [v0, w0] = multi_spiral_step(v, w, zero, etas, 5.0);
  GridField dv = v0;
  dv -= v;
  CHECK(max_entry(dv) == 0.0);

  // single nonzero amplitude reduces to one spiral with E1=e_0, E2=e_ds
  std::vector<GridField> amps = zero;
  amps[0] = sample(dom, FieldKind::scalar, 1, [](const std::array<double, kMaxDim>& x, double* o) {
    o[0] = 0.3 + 0.1 * x[1];
  });
  auto [mv, mw] = multi_spiral_step(v, w, amps, etas, 5.0);
  Eigen::VectorXd E1 = Eigen::VectorXd::Zero(k), E2 = Eigen::VectorXd::Zero(k);
  E1(0) = 1;
  E2(ds) = 1;
  SpiralSpec s{amps[0], etas[0], E1, E2, 5.0};
  auto [sv, sw] = spiral_step(v, w, s);
  dv = mv;
  dv -= sv;
  GridField dw = mw;
  dw -= sw;
  CHECK(max_entry(dv) < 1e-14);
  CHECK(max_entry(dw) < 1e-14);

  // constant amplitudes, linear v: increment = (1/2) sum a_i^2 eta_i eta_i^T
  std::vector<GridField> camps;
  const double av[3] = {0.5, 0.4, 0.3};
  for (int i = 0; i < ds; ++i) camps.push_back(const_scalar(dom, av[i]));
  auto [cv, cw] = multi_spiral_step(v, w, camps, etas, 1.0);
  GridField inc = stretching_content(cv, cw);
  inc -= stretching_content(v, w);
  double err = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    for (int p = 0; p < 2; ++p)
      for (int q = p; q < 2; ++q) {
        double want = 0;
        for (int i = 0; i < ds; ++i) want += 0.5 * av[i] * av[i] * etas[i](p) * etas[i](q);
        err = std::max(err, std::abs(inc.sym(p, q, flat) - want));
      }
  });
  CHECK(err < 1e-8);
  CHECK(sup_norm(multi_spiral_residual(v, w, cv, cw, camps, etas, 1.0)) < 1e-8);

  // k < 2 dstar rejected
  GridField vs(dom, FieldKind::vector, 5);
  CHECK_THROWS_AS(multi_spiral_step(vs, w, camps, etas, 5.0), precondition_error);
}
