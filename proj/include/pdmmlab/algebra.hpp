#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pdmmlab/graph.hpp"

namespace pdmmlab {

// Sign of the d x d edge block: A_ij = edge_sign(i,j) * I_d, with
// A_ij = -A_ji = I for i > j.
inline double edge_sign(int i, int j) { return i > j ? 1.0 : -1.0; }

// Edge constraint matrix C and the permutation P that swaps the two directed
// halves of z-space blockwise. Consensus constraints only: b = 0, square
// +-I_d blocks.
struct ConstraintSystem {
  Eigen::MatrixXd C;  // (2 m d) x (n d)
  Eigen::MatrixXd P;  // (2 m d) x (2 m d)
  int n = 0;
  int m = 0;
  int d = 1;

  int z_dim() const { return 2 * m * d; }
  int x_dim() const { return n * d; }
};

ConstraintSystem build_constraint_system(const Graph& g, int d = 1);

// Orthonormal basis of Psi = ran(C) + ran(PC) and the projector onto its
// orthogonal complement Psi_perp = ker(C^T) cap ker((PC)^T).
struct SubspaceProjector {
  Eigen::MatrixXd basis;    // (2 m d) x dim_psi, orthonormal columns
  Eigen::MatrixXd pi_perp;  // I - basis basis^T
  int dim_psi = 0;
  int dim_psi_perp = 0;
  double tol = 1e-10;

  bool vacuous() const { return dim_psi_perp == 0; }
  Eigen::MatrixXd pi_psi() const { return basis * basis.transpose(); }
};

// Rank decided by SVD of [C | PC]: singular values below tol * sigma_max
// count as zero.
SubspaceProjector subspace_projector(const ConstraintSystem& cs, double tol = 1e-10);

// Per-entry lower bound on Var(Z_perp^(k)):
//   diag( Pi_perp (sigma^2/2) ((I+P) + |1-2 theta mu|^{2k} (I-P)) ).
// mu = 1 reproduces the synchronous closed form.
struct BoundCurve {
  std::vector<int> ks;
  std::vector<Eigen::VectorXd> values;  // one (2 m d)-vector per k
  double sigma2 = 0;
  double theta = 1;
  double mu = 1;
};

BoundCurve bound_curve(const SubspaceProjector& sp, const Eigen::MatrixXd& P, double sigma2,
                       double theta, double mu, const std::vector<int>& ks);

// Conditional mean of the Psi_perp component under uniform update
// probability mu:
//   (1/2) ((I+P) + (1-2 theta mu)^k (I-P)) Pi_perp z0.
Eigen::VectorXd expected_zperp(const SubspaceProjector& sp, const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& z0, double theta, double mu, int k);

}  // namespace pdmmlab
