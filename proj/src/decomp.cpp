#include "vkci/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"

namespace vkci {

namespace {

Eigen::VectorXd pack_sym(const Eigen::MatrixXd& A) {
  const int d = (int)A.rows();
  Eigen::VectorXd v(sym_dim(d));
  int a = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) v(a++) = A(i, j);
  return v;
}

Eigen::MatrixXd gram_of(const std::vector<Eigen::VectorXd>& etas, int d) {
  const int ds = sym_dim(d);
  Eigen::MatrixXd G(ds, ds);
  for (int i = 0; i < ds; ++i) G.col(i) = pack_sym(Eigen::MatrixXd(etas[i] * etas[i].transpose()));
  return G;
}

double spectral(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
}

double lambda_min(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// coeff_i as a functional on symmetric matrices: coeff_i(A) = <M_i, A>_F.
Eigen::MatrixXd dual_matrix(const Eigen::MatrixXd& coeff, int d, int i) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
  int a = 0;
  for (int p = 0; p < d; ++p)
    for (int q = p; q < d; ++q) {
      if (p == q)
        M(p, p) = coeff(i, a);
      else
        M(p, q) = M(q, p) = 0.5 * coeff(i, a);
      ++a;
    }
  return M;
}

double nuclear(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

struct Candidate {
  std::vector<Eigen::VectorXd> etas;
  Eigen::MatrixXd coeff;
  double min_id_coeff = -1;
};

bool evaluate(std::vector<Eigen::VectorXd> etas, int d, Candidate& out) {
  Eigen::MatrixXd G = gram_of(etas, d);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible()) return false;
  if (lu.rcond() < 1e-6) return false;
  Eigen::MatrixXd coeff = lu.inverse();
  Eigen::VectorXd cid = coeff * pack_sym(Eigen::MatrixXd::Identity(d, d));
  out.etas = std::move(etas);
  out.coeff = std::move(coeff);
  out.min_id_coeff = cid.minCoeff();
  return true;
}

double bump01(double u) {  // exp(-1/(1-u)) for u in [0,1), else 0
  return u < 1.0 ? std::exp(-1.0 / (1.0 - u)) : 0.0;
}

}  // namespace

Eigen::VectorXd PrimitiveFrame::coefficients(const Eigen::MatrixXd& A) const {
  return coeff * pack_sym(A);
}

Eigen::MatrixXd PrimitiveFrame::reconstruct(const Eigen::VectorXd& c) const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < dstar(); ++i) A += c(i) * etas[i] * etas[i].transpose();
  return A;
}

std::string PrimitiveFrame::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["r0"] = r0;
  for (const auto& e : etas) j["etas"].push_back(std::vector<double>(e.data(), e.data() + e.size()));
  for (int i = 0; i < coeff.rows(); ++i) {
    std::vector<double> row(coeff.cols());
    for (int c = 0; c < coeff.cols(); ++c) row[c] = coeff(i, c);
    j["coeff"].push_back(row);
  }
  return j.dump(2);
}

PrimitiveFrame build_primitive_frame(int d, unsigned long seed) {
  if (d < 1) throw config_error("frame dimension must be >= 1");
  Candidate best;

  if (d == 1) {
    best.etas = {Eigen::VectorXd::Ones(1)};
    best.coeff = Eigen::MatrixXd::Identity(1, 1);
    best.min_id_coeff = 1.0;
  } else if (d == 2) {
    // fixed trigonometric frame, angles (i-1)*pi/3
    std::vector<Eigen::VectorXd> etas;
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd e(2);
      const double th = i * M_PI / 3.0;
      e << std::cos(th), std::sin(th);
      etas.push_back(e);
    }
    if (!evaluate(std::move(etas), d, best)) throw config_error("degenerate trigonometric frame");
  } else {
    // randomized search maximizing the smallest identity coefficient
    std::mt19937_64 rng(seed + 7919 * (unsigned long)d);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int ds = sym_dim(d);
    auto random_dir = [&]() {
      Eigen::VectorXd v(d);
      do {
        for (int a = 0; a < d; ++a) v(a) = gauss(rng);
      } while (v.norm() < 1e-8);
      return Eigen::VectorXd(v / v.norm());
    };
    for (int trial = 0; trial < 3000; ++trial) {
      std::vector<Eigen::VectorXd> etas;
      for (int i = 0; i < ds; ++i) etas.push_back(random_dir());
      Candidate c;
      if (evaluate(std::move(etas), d, c) && c.min_id_coeff > best.min_id_coeff) best = std::move(c);
    }
    for (int it = 0; it < 4000 && best.min_id_coeff > 0; ++it) {
      std::vector<Eigen::VectorXd> etas = best.etas;
      const int which = (int)(rng() % etas.size());
      Eigen::VectorXd pert(d);
      for (int a = 0; a < d; ++a) pert(a) = gauss(rng);
      Eigen::VectorXd v = etas[which] + 0.07 * pert;
      etas[which] = v / v.norm();
      Candidate c;
      if (evaluate(std::move(etas), d, c) && c.min_id_coeff > best.min_id_coeff) best = std::move(c);
    }
    if (best.min_id_coeff <= 0.1)
      throw config_error("primitive frame search failed for d=" + std::to_string(d) +
                         " (best min coefficient " + std::to_string(best.min_id_coeff) + ")");
  }

  PrimitiveFrame f;
  f.d = d;
  f.etas = best.etas;
  f.coeff = best.coeff;
  double kappa = 0;
  for (int i = 0; i < f.dstar(); ++i) kappa = std::max(kappa, nuclear(dual_matrix(f.coeff, d, i)));
  f.r0 = best.min_id_coeff / (1.0 + kappa);

  // sampled boundary verification
  std::mt19937_64 rng(seed ^ 0x9e3779b9ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < 64; ++s) {
    Eigen::MatrixXd U(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) U(i, j) = U(j, i) = gauss(rng);
    U /= spectral(U);
    Eigen::VectorXd c = f.coefficients(Eigen::MatrixXd::Identity(d, d) + f.r0 * U);
    if (c.minCoeff() < f.r0 / 2 - 1e-10)
      throw config_error("frame positivity radius failed boundary sampling");
  }
  return f;
}

Eigen::VectorXd decompose_near_identity(const PrimitiveFrame& frame, const Eigen::MatrixXd& A,
                                        bool* positive) {
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1 + A.cwiseAbs().maxCoeff()))
    throw precondition_error("decompose_near_identity needs a symmetric matrix");
  Eigen::VectorXd c = frame.coefficients(A);
  if (positive) *positive = c.minCoeff() >= frame.r0 / 2 - 1e-12;
  return c;
}

Eigen::VectorXd PartitionFrame::weights_squared(const Eigen::MatrixXd& A) const {
  Eigen::VectorXd beta(charts.size());
  double sum = 0;
  for (size_t m = 0; m < charts.size(); ++m) {
    const double s = spectral(A - charts[m].center);
    const double u = s * s / (charts[m].radius * charts[m].radius);
    beta(m) = bump01(u);
    sum += beta(m);
  }
  if (sum <= 0) throw precondition_error("matrix outside the covered set of the partition frame");
  return beta / sum;
}

PartitionFrame build_partition_frame(const PrimitiveFrame& base, const GridField& D) {
  if (D.kind() != FieldKind::symmatrix) throw config_error("partition frame needs a symmatrix field");
  const Domain& dom = D.domain();
  const int d = dom.dim;
  PartitionFrame pf;
  pf.d = d;
  pf.base = base;

  const long lo = dom.margin - D.valid(), hi = dom.margin + dom.n + D.valid();
  // greedy lexicographic net: every sampled matrix ends up within half the
  // radius of some chart
  for_each_index(dom, lo, hi, [&](long flat, const std::array<long, kMaxDim>&) {
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) M(i, j) = D.sym(i, j, flat);
    for (const auto& ch : pf.charts)
      if (spectral(M - ch.center) <= 0.5 * ch.radius) return;
    PartitionChart ch;
    ch.center = M;
    const double lmin = lambda_min(M);
    if (lmin <= 0) throw precondition_error("partition frame: matrix in range not positive definite");
    ch.radius = base.r0 * lmin / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    Eigen::MatrixXd sq = es.operatorSqrt();
    ch.inv_sqrt_center = es.operatorInverseSqrt();
    for (const auto& eta : base.etas) {
      Eigen::VectorXd v = sq * eta;
      ch.dyad_scale.push_back(v.squaredNorm());
      ch.etas.push_back(Eigen::VectorXd(v / v.norm()));
    }
    pf.charts.push_back(std::move(ch));
  });

  int n0 = 0;
  for_each_index(dom, lo, hi, [&](long flat, const std::array<long, kMaxDim>&) {
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) M(i, j) = D.sym(i, j, flat);
    int active = 0;
    for (const auto& ch : pf.charts)
      if (spectral(M - ch.center) < ch.radius) ++active;
    n0 = std::max(n0, active * base.dstar());
  });
  pf.n0 = n0;
  return pf;
}

PositiveDecomposition decompose_positive_field(const GridField& D, double c_min) {
  if (c_min <= 0) throw config_error("decompose_positive_field needs c_min > 0");
  const Domain& dom = D.domain();
  std::array<double, kMaxDim> where{};
  const double lmin = min_eigenvalue(D, D.valid(), &where);
  if (lmin < c_min) {
    std::ostringstream os;
    os << "field not uniformly positive definite: min eigenvalue " << lmin << " < " << c_min
       << " at (";
    for (int a = 0; a < dom.dim; ++a) os << (a ? "," : "") << where[a];
    os << ")";
    throw precondition_error(os.str());
  }

  PrimitiveFrame base = build_primitive_frame(dom.dim);
  PartitionFrame pf = build_partition_frame(base, D);
  const int ds = base.dstar();
  const int d = dom.dim;

  PositiveDecomposition out;
  out.n0 = pf.n0;
  for (const auto& ch : pf.charts)
    for (int i = 0; i < ds; ++i) out.etas.push_back(ch.etas[i]);
  out.b.assign(out.etas.size(), GridField::scalar(dom));
  for (auto& f : out.b) f.set_valid(D.valid());

  const long lo = dom.margin - D.valid(), hi = dom.margin + dom.n + D.valid();
  for_each_index(dom, lo, hi, [&](long flat, const std::array<long, kMaxDim>&) {
    Eigen::MatrixXd M(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) M(i, j) = D.sym(i, j, flat);
    Eigen::VectorXd w2 = pf.weights_squared(M);
    for (size_t m = 0; m < pf.charts.size(); ++m) {
      if (w2(m) <= 0) continue;
      const auto& ch = pf.charts[m];
      Eigen::VectorXd c = base.coefficients(ch.inv_sqrt_center * M * ch.inv_sqrt_center);
      for (int i = 0; i < ds; ++i) {
        const double v = w2(m) * std::max(0.0, c(i) * ch.dyad_scale[i]);
        out.b[m * ds + i].comp(0)[flat] = std::sqrt(v);
      }
    }
  });
  return out;
}

}  // namespace vkci
