#include "pdmmlab/algebra.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace pdmmlab {

ConstraintSystem build_constraint_system(const Graph& g, int d) {
  if (d < 1) throw std::invalid_argument("build_constraint_system: d must be >= 1");
  const int n = g.n(), m = g.m();
  ConstraintSystem cs;
  cs.n = n;
  cs.m = m;
  cs.d = d;
  cs.C = Eigen::MatrixXd::Zero(2 * m * d, n * d);
  for (int l = 0; l < m; ++l) {
    const auto [a, b] = g.edges()[l];  // a < b
    // slot l holds z_{a|b}: block A_ab = -I; slot l+m holds z_{b|a}: A_ba = +I
    cs.C.block(l * d, a * d, d, d) = edge_sign(a, b) * Eigen::MatrixXd::Identity(d, d);
    cs.C.block((l + m) * d, b * d, d, d) = edge_sign(b, a) * Eigen::MatrixXd::Identity(d, d);
  }
  cs.P = Eigen::MatrixXd::Zero(2 * m * d, 2 * m * d);
  cs.P.block(0, m * d, m * d, m * d) = Eigen::MatrixXd::Identity(m * d, m * d);
  cs.P.block(m * d, 0, m * d, m * d) = Eigen::MatrixXd::Identity(m * d, m * d);
  return cs;
}

SubspaceProjector subspace_projector(const ConstraintSystem& cs, double tol) {
  const int zdim = cs.z_dim();
  Eigen::MatrixXd stacked(zdim, 2 * cs.x_dim());
  stacked << cs.C, cs.P * cs.C;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  if (sv.size() > 0 && sv(0) > 0) {
    const double cut = tol * sv(0);
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > cut) ++rank;
  }
  SubspaceProjector sp;
  sp.tol = tol;
  sp.dim_psi = rank;
  sp.dim_psi_perp = zdim - rank;
  sp.basis = svd.matrixU().leftCols(rank);
  sp.pi_perp = Eigen::MatrixXd::Identity(zdim, zdim) - sp.basis * sp.basis.transpose();
  return sp;
}

BoundCurve bound_curve(const SubspaceProjector& sp, const Eigen::MatrixXd& P, double sigma2,
                       double theta, double mu, const std::vector<int>& ks) {
  if (sigma2 < 0) throw std::invalid_argument("bound_curve: sigma2 must be >= 0");
  if (!(theta > 0 && theta <= 1)) throw std::invalid_argument("bound_curve: theta must be in (0,1]");
  if (!(mu > 0 && mu <= 1)) throw std::invalid_argument("bound_curve: mu must be in (0,1]");
  // diag entries of Pi (I +- P); both are >= 0, clip SVD roundoff
  const Eigen::VectorXd diag_pi = sp.pi_perp.diagonal();
  const Eigen::VectorXd diag_pip = (sp.pi_perp * P).diagonal();
  const Eigen::VectorXd d_plus = (diag_pi + diag_pip).cwiseMax(0.0);
  const Eigen::VectorXd d_minus = (diag_pi - diag_pip).cwiseMax(0.0);
  const double rate = std::abs(1.0 - 2.0 * theta * mu);
  BoundCurve bc;
  bc.ks = ks;
  bc.sigma2 = sigma2;
  bc.theta = theta;
  bc.mu = mu;
  bc.values.reserve(ks.size());
  for (int k : ks) {
    if (k < 0) throw std::invalid_argument("bound_curve: iteration indices must be >= 0");
    bc.values.push_back(0.5 * sigma2 * (d_plus + std::pow(rate, 2 * k) * d_minus));
  }
  return bc;
}

Eigen::VectorXd expected_zperp(const SubspaceProjector& sp, const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& z0, double theta, double mu, int k) {
  if (z0.size() != sp.pi_perp.rows())
    throw std::invalid_argument("expected_zperp: z0 has wrong length");
  if (k < 0) throw std::invalid_argument("expected_zperp: k must be >= 0");
  const Eigen::VectorXd zp = sp.pi_perp * z0;
  const Eigen::VectorXd pzp = P * zp;
  return 0.5 * ((zp + pzp) + std::pow(1.0 - 2.0 * theta * mu, k) * (zp - pzp));
}

}  // namespace pdmmlab
