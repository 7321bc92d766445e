#pragma once

#include <optional>

#include "flex/types.hpp"

namespace flex {

// Instance of   maximize  u^T Q u - 2 b^T u   subject to  ||u||_2 <= gamma,
// with Q symmetric positive semidefinite. Q is symmetrized on construction;
// inputs further than 1e-10 from symmetric are rejected.
struct QuadraticSubproblem {
  MatrixXd Q;
  VectorXd b;
  double gamma;

  QuadraticSubproblem(MatrixXd q, VectorXd lin, double radius);
};

struct BallSolution {
  VectorXd u_star;
  double mu;            // multiplier in the convention (Q + mu I) u = b
  double objective;     // u^T Q u - 2 b^T u at u_star
  double kkt_residual;  // ||(Q + mu I) u - b||_2
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Root of the norm equation  sum_i b_i^2 / (alpha_i + mu)^2 = gamma^2  on the
// maximizing branch mu < -alpha_max, where the left side decreases
// monotonically from +inf to 0. `alphas` must be ascending eigenvalues of Q
// and `b_rot` the linear term rotated into the eigenbasis. Returns nullopt in
// the hard case: b carries no weight on the dominant eigenspace and the norm
// equation has no root on the branch, so the caller must complete the
// solution with a dominant-eigenvector component.
std::optional<double> secular_root(const VectorXd& alphas,
                                   const VectorXd& b_rot, double gamma);

// Exact global maximizer over the closed ball. Since Q is PSD the objective
// is convex and the maximum sits on the boundary ||u|| = gamma; the solver
// asserts this rather than assuming it. Cost: one m x m symmetric
// eigendecomposition plus a scalar root-finding.
//
// Conventions, fixed for reproducibility:
//  - stationarity (Q + mu I) u = b with alpha_i + mu <= 0 for all i, the
//    unique branch where the sphere-restricted second-order condition holds;
//  - hard case (b orthogonal to the dominant eigenspace): the particular
//    solution is completed along the dominant eigenvector, sign chosen so the
//    eigenvector's lowest-index nonzero coordinate is positive;
//  - fully degenerate Q = 0, b = 0: returns gamma * e_1.
BallSolution solve_ball_qp(const QuadraticSubproblem& p);

}  // namespace flex
