#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "vkci/grid.hpp"

using namespace vkci;

namespace {

GridField sample_scalar(const Domain& dom, const std::function<double(double, double)>& f) {
  return sample(dom, FieldKind::scalar, 1,
                [&](const std::array<double, kMaxDim>& x, double* out) { out[0] = f(x[0], x[1]); });
}

// Dense midpoint quadrature of g over the unit-ball bump kernel, d=2.
double kernel_average(const std::function<double(double, double)>& g) {
  const int m = 600;
  double num = 0, den = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double u = -1.0 + (i + 0.5) * 2.0 / m;
      const double v = -1.0 + (j + 0.5) * 2.0 / m;
      const double r2 = u * u + v * v;
      if (r2 >= 1.0) continue;
      const double w = std::exp(-1.0 / (1.0 - r2));
      num += w * g(u, v);
      den += w;
    }
  }
  return num / den;
}

}  // namespace

TEST_CASE("derivative: constants and polynomials reproduced exactly") {
  Domain dom(2, 32, 8);
  GridField c = sample_scalar(dom, [](double, double) { return 7.25; });
  GridField dc = derivative(c, 0, 1);
  CHECK(sup_norm(dc) < 1e-12);

  GridField xy = sample_scalar(dom, [](double x, double y) { return x * y; });
  std::array<int, kMaxDim> m11{};
  m11[0] = 1;
  m11[1] = 1;
  GridField dxy = derivative(xy, m11);
  double err = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    err = std::max(err, std::abs(dxy.comp(0)[flat] - 1.0));
  });
  CHECK(err < 1e-12);

  // degree-4 polynomial, 4th derivative exact
  GridField p4 = sample_scalar(dom, [](double x, double) { return std::pow(x - 0.3, 4); });
  GridField d4 = derivative(p4, 0, 4);
  double e4 = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    e4 = std::max(e4, std::abs(d4.comp(0)[flat] - 24.0));
  });
  CHECK(e4 < 1e-8);
}

TEST_CASE("derivative: refinement oracle for sin, ~16x per doubling") {
  auto err_at = [](long n) {
    Domain dom(2, n, 8);
    GridField f = sample_scalar(dom, [](double x, double) { return std::sin(2 * M_PI * x); });
    GridField g = derivative(f, 0, 1);
    double e = 0;
    for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>& x) {
      e = std::max(e, std::abs(g.comp(0)[flat] - 2 * M_PI * std::cos(2 * M_PI * x[0])));
    });
    return e;
  };
  const double e64 = err_at(64), e128 = err_at(128);
  CHECK(e64 < 4e-5);  // (2pi)^5 h^4 / 30 with slack
  CHECK(e64 / e128 > 12.0);
  CHECK(e64 / e128 < 20.0);
}

TEST_CASE("derivative: pad accounting errors") {
  Domain dom(2, 32, 4);
  GridField f = sample_scalar(dom, [](double x, double) { return x; });
  std::array<int, kMaxDim> m5{};
  m5[0] = 5;
  CHECK_THROWS_AS(derivative(f, m5), config_error);
  GridField g = derivative(f, 0, 2);  // valid 4 -> 2
  CHECK(g.valid() == 2);
  GridField h = derivative(g, 1, 2);  // valid 2 -> 0
  CHECK_THROWS_AS(derivative(h, 0, 1), resolvability_error);
}

TEST_CASE("mollify: unit weight sum on constants") {
  Domain dom(2, 64, 16);
  GridField f = sample_scalar(dom, [](double, double) { return 3.0; });
  GridField g = mollify(f, 0.1);
  double e = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    e = std::max(e, std::abs(g.comp(0)[flat] - 3.0));
  });
  CHECK(e < 1e-13);
  CHECK_THROWS_AS(mollify(f, 0.02), resolvability_error);   // below 2h
  CHECK_THROWS_AS(mollify(f, 0.5), resolvability_error);    // beyond pad
}

TEST_CASE("mollify: l^2 error law against continuum oracle") {
  Domain dom(2, 256, 48);
  GridField f = sample_scalar(dom, [](double x, double) { return std::sin(2 * M_PI * x); });
  double errs[3];
  double oracle[3];
  const double ls[3] = {0.04, 0.08, 0.16};
  for (int i = 0; i < 3; ++i) {
    GridField g = mollify(f, ls[i]);
    double e = 0;
    for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
      e = std::max(e, std::abs(g.comp(0)[flat] - f.comp(0)[flat]));
    });
    errs[i] = e;
    const double l = ls[i];
    oracle[i] = 1.0 - kernel_average([&](double u, double) { return std::cos(2 * M_PI * l * u); });
  }
  for (int i = 0; i < 3; ++i) CHECK(errs[i] == doctest::Approx(oracle[i]).epsilon(0.10));
  CHECK(errs[1] / errs[0] == doctest::Approx(4.0).epsilon(0.10));
  CHECK(errs[2] / errs[1] == doctest::Approx(4.0).epsilon(0.10));
}

TEST_CASE("mollify: product commutator") {
  Domain dom(2, 256, 48);
  GridField fx = sample_scalar(dom, [](double x, double) { return x; });
  GridField fy = sample_scalar(dom, [](double, double y) { return y; });
  GridField fxy = sample_scalar(dom, [](double x, double y) { return x * y; });
  GridField fxx = sample_scalar(dom, [](double x, double) { return x * x; });

  // radially symmetric kernel: cross moment vanishes, commutator of x*y is 0
  {
    const double l = 0.08;
    GridField lhs = mollify(fxy, l);
    GridField mx = mollify(fx, l), my = mollify(fy, l);
    double e = 0;
    for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
      e = std::max(e, std::abs(lhs.comp(0)[flat] - mx.comp(0)[flat] * my.comp(0)[flat]));
    });
    CHECK(e < 1e-12);
  }

  // x*x exposes the l^2 second moment exactly
  const double m2 = kernel_average([](double u, double) { return u * u; });
  double prev = 0;
  for (double l : {0.04, 0.08, 0.16}) {
    GridField lhs = mollify(fxx, l);
    GridField mx = mollify(fx, l);
    double e = 0;
    for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
      e = std::max(e, std::abs(lhs.comp(0)[flat] - mx.comp(0)[flat] * mx.comp(0)[flat]));
    });
    CHECK(e == doctest::Approx(l * l * m2).epsilon(0.10));
    if (prev > 0) CHECK(e / prev == doctest::Approx(4.0).epsilon(0.10));
    prev = e;
  }
}

TEST_CASE("mollify commutes with derivative on polynomials") {
  Domain dom(2, 64, 24);
  GridField f = sample_scalar(dom, [](double x, double y) { return x * x * y + 0.5 * y * y * y; });
  GridField a = derivative(mollify(f, 0.1), 0, 1);
  GridField b = mollify(derivative(f, 0, 1), 0.1);
  a -= b;
  CHECK(sup_norm(a) < 1e-8 * cm_norm(f, 0));
}

TEST_CASE("mollify: measured stima-style derivative constants stay bounded") {
  Domain dom(2, 256, 48);
  GridField f = sample_scalar(dom, [](double x, double) { return std::sin(6 * M_PI * x); });
  for (double l : {0.05, 0.08, 0.12, 0.16}) {
    GridField g = mollify(f, l);
    const double c1 = cm_norm(derivative(g, 0, 1), 0) * l / cm_norm(f, 0);
    const double c2 = cm_norm(derivative(g, 0, 2), 0) * l * l / cm_norm(f, 0);
    CHECK(c1 < 4.0);
    CHECK(c2 < 30.0);
  }
}

TEST_CASE("holder_norm: constants and linear fields") {
  Domain dom(2, 64, 8);
  GridField c = sample_scalar(dom, [](double, double) { return -2.5; });
  CHECK(holder_norm(c, 0, 0.5).value == doctest::Approx(2.5).epsilon(1e-12));

  GridField lin = sample_scalar(dom, [](double x, double) { return x; });
  HolderEstimate e = holder_norm(lin, 0, 1.0);
  CHECK(e.value == doctest::Approx(1.0 + 1.0).epsilon(1e-10));  // sup + Lipschitz quotient
}

TEST_CASE("holder_norm: oscillatory C^{1,1/2} vs dense oracle") {
  Domain dom(2, 128, 8);
  GridField f = sample_scalar(dom, [](double x, double) { return std::sin(8 * M_PI * x); });
  HolderEstimate est = holder_norm(f, 1, 0.5);

  // continuum: sum of sups + best difference quotient of f' over admitted separations
  double semi = 0;
  const double diam4 = std::sqrt(2.0) / 4.0;
  for (int i = 1; i <= 4000; ++i) {
    const double delta = diam4 * i / 4000.0;
    semi = std::max(semi, 2 * 8 * M_PI * std::abs(std::sin(4 * M_PI * delta)) / std::sqrt(delta));
  }
  const double oracle = (1.0 + 8 * M_PI) + semi;
  CHECK(est.value == doctest::Approx(oracle).epsilon(0.15));
}

TEST_CASE("holder_norm monotone in m") {
  Domain dom(2, 64, 8);
  GridField f = sample_scalar(dom, [](double x, double y) { return std::sin(2 * M_PI * x) * y; });
  CHECK(holder_norm(f, 1, 0.5).value >= holder_norm(f, 0, 0.5).value);
}

TEST_CASE("sup_norm and extend_smooth") {
  Domain dom(2, 32, 12);
  GridField z(dom, FieldKind::scalar, 1);
  CHECK(sup_norm(z) == 0.0);

  GridField one = sample_scalar(dom, [](double, double) { return 1.0; });
  GridField ext = extend_smooth(one);
  double e = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    e = std::max(e, std::abs(ext.comp(0)[flat] - 1.0));
  });
  CHECK(e == 0.0);

  GridField f = sample_scalar(dom, [](double x, double y) { return std::cos(3 * x + y); });
  GridField fe = extend_smooth(f);
  double sup_pad = 0, sup_f = 0;
  for_each_point(dom, dom.margin, [&](long flat, const std::array<double, kMaxDim>&) {
    sup_pad = std::max(sup_pad, std::abs(fe.comp(0)[flat]));
    sup_f = std::max(sup_f, std::abs(f.comp(0)[flat]));
  });
  CHECK(sup_pad <= sup_f + 1e-15);
}

TEST_CASE("extend_smooth accepts interior-only data") {
  Domain dom(2, 16, 8);
  GridField g(dom, FieldKind::scalar, 1);
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    g.comp(0)[flat] = 2.0;
  });
  g.set_valid(0);
  GridField e = extend_smooth(g);
  CHECK(e.valid() == dom.margin);
  double err = 0;
  for_each_point(dom, 0, [&](long flat, const std::array<double, kMaxDim>&) {
    err = std::max(err, std::abs(e.comp(0)[flat] - 2.0));
  });
  CHECK(err == 0.0);
}

TEST_CASE("reextend replicates the last valid ring") {
  Domain dom(1, 16, 6);
  GridField f = sample_scalar(dom, [](double x, double) { return x; });
  f.set_valid(2);
  GridField g = reextend(f);
  CHECK(g.valid() == 6);
  // leftmost pad cell equals value at depth 2
  CHECK(g.comp(0)[0] == f.comp(0)[dom.margin - 2]);
}

TEST_CASE("field dump writes the documented header") {
  Domain dom(2, 8, 2);
  GridField f = sample_scalar(dom, [](double x, double y) { return x + y; });
  const std::string path = "/tmp/vkci_dump_test.bin";
  dump_field(f, path);
  std::ifstream is(path, std::ios::binary);
  char magic[6];
  is.read(magic, 6);
  CHECK(std::string(magic, 6) == "MAFLD1");
  uint32_t d = 0, comps = 0, n0 = 0, n1 = 0;
  is.read(reinterpret_cast<char*>(&d), 4);
  is.read(reinterpret_cast<char*>(&comps), 4);
  is.read(reinterpret_cast<char*>(&n0), 4);
  is.read(reinterpret_cast<char*>(&n1), 4);
  CHECK(d == 2);
  CHECK(comps == 1);
  CHECK(n0 == 9);
  CHECK(n1 == 9);
  double first = -1;
  is.read(reinterpret_cast<char*>(&first), 8);
  CHECK(first == doctest::Approx(0.0));
}
