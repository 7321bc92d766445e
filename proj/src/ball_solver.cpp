#include "flex/ball_solver.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace flex {
namespace {

constexpr double kSymTol = 1e-10;
constexpr double kPsdTol = -1e-10;
constexpr int kMaxBisect = 200;
constexpr int kMaxNewton = 50;

double norm_equation(const VectorXd& alphas, const VectorXd& b2, double mu) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    const double den = alphas[i] + mu;
    s += b2[i] / (den * den);
  }
  return s;
}

double norm_equation_derivative(const VectorXd& alphas, const VectorXd& b2,
                                double mu) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < alphas.size(); ++i) {
    const double den = alphas[i] + mu;
    s += -2.0 * b2[i] / (den * den * den);
  }
  return s;
}

// Sign convention for eigenvector completions: positive on the lowest-index
// coordinate that is not negligibly small.
VectorXd canonical_sign(VectorXd v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace

QuadraticSubproblem::QuadraticSubproblem(MatrixXd q, VectorXd lin,
                                         double radius)
    : Q(std::move(q)), b(std::move(lin)), gamma(radius) {
  require(Q.rows() == Q.cols(), "QuadraticSubproblem: Q must be square");
  require(Q.rows() == b.size(), "QuadraticSubproblem: b dimension mismatch");
  require(Q.allFinite() && b.allFinite(),
          "QuadraticSubproblem: non-finite entries");
  require(gamma > 0.0 && std::isfinite(gamma),
          "QuadraticSubproblem: gamma must be positive");
  const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  require(asym <= kSymTol * scale, "QuadraticSubproblem: Q not symmetric");
  Q = 0.5 * (Q + Q.transpose()).eval();
}

std::optional<double> secular_root(const VectorXd& alphas,
                                   const VectorXd& b_rot, double gamma) {
  require(alphas.size() >= 1 && alphas.size() == b_rot.size(),
          "secular_root: dimension mismatch");
  require(gamma > 0.0, "secular_root: gamma must be positive");

  const Eigen::Index m = alphas.size();
  const double alpha_max = alphas[m - 1];
  const VectorXd b2 = b_rot.cwiseAbs2();
  const double b_norm = b_rot.norm();
  if (b_norm == 0.0) return std::nullopt;

  // Weight of b on the (numerically grouped) dominant eigenspace.
  const double gap_tol = 1e-12 * std::max(1.0, std::abs(alpha_max));
  double dominant_weight = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (alphas[i] >= alpha_max - gap_tol) dominant_weight += b2[i];
  }

  if (dominant_weight <= 1e-28 * b2.sum()) {
    // The norm equation stays finite at the branch endpoint; a root exists
    // below -alpha_max only if it still exceeds gamma^2 there.
    double at_endpoint = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (alphas[i] < alpha_max - gap_tol) {
        const double den = alphas[i] - alpha_max;
        at_endpoint += b2[i] / (den * den);
      }
    }
    if (at_endpoint <= gamma * gamma) return std::nullopt;  // hard case
  }

  // Bracket the root on mu < -alpha_max. Upper end: walk toward the pole
  // until the equation exceeds gamma^2. Lower end: |mu| > alpha_max +
  // ||b||/gamma guarantees the equation is below gamma^2.
  const double target = gamma * gamma;
  double hi;
  double offset = 1e-3 * std::max(1.0, std::abs(alpha_max));
  int guard = 0;
  while (norm_equation(alphas, b2, -alpha_max - offset) <= target) {
    offset *= 0.25;
    if (++guard > 600 || offset < 1e-300) {
      return std::nullopt;  // numerically indistinguishable from hard case
    }
  }
  hi = -alpha_max - offset;
  double lo = -alpha_max - b_norm / gamma - 1.0;
  guard = 0;
  while (norm_equation(alphas, b2, lo) > target) {
    lo = -alpha_max + 2.0 * (lo + alpha_max);
    if (++guard > 200) throw SolverFailure("secular_root: no lower bracket");
  }

  for (int i = 0; i < kMaxBisect; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (norm_equation(alphas, b2, mid) > target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  // Newton polish on phi(mu) = sum b_i^2/(alpha_i+mu)^2 - gamma^2,
  // safeguarded by the bisection bracket.
  double mu = 0.5 * (lo + hi);
  for (int i = 0; i < kMaxNewton; ++i) {
    const double phi = norm_equation(alphas, b2, mu) - target;
    if (std::abs(phi) <= 1e-12 * target) return mu;
    if (phi > 0.0) {
      hi = mu;
    } else {
      lo = mu;
    }
    const double dphi = norm_equation_derivative(alphas, b2, mu);
    double next = dphi != 0.0 ? mu - phi / dphi : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    mu = next;
  }
  // The in-loop target polishes to 1e-12 when the equation is well behaved;
  // accept anything inside the contracted tolerance after the iteration cap.
  if (std::abs(norm_equation(alphas, b2, mu) - target) <= 1e-10 * target) {
    return mu;
  }
  // Bracket is at machine width but the residual target is unreachable: the
  // equation is too steep near the pole, which happens when b is nearly
  // orthogonal to the dominant eigenspace. Defer to the hard-case path.
  if (dominant_weight <= 1e-16 * b2.sum()) return std::nullopt;
  throw SolverFailure("secular_root: did not converge");
}

BallSolution solve_ball_qp(const QuadraticSubproblem& p) {
  const Eigen::Index m = p.Q.rows();
  const double gamma = p.gamma;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(p.Q);
  if (eig.info() != Eigen::Success) {
    throw SolverFailure("solve_ball_qp: eigendecomposition failed");
  }
  const VectorXd alphas = eig.eigenvalues();  // ascending
  const MatrixXd& basis = eig.eigenvectors();
  const double scale = std::max(1.0, std::abs(alphas[m - 1]));
  require(alphas[0] >= kPsdTol * scale, "solve_ball_qp: Q not PSD");

  const double alpha_max = alphas[m - 1];
  const VectorXd c = basis.transpose() * p.b;

  // Fully informationless instance: any boundary point is optimal, so pick
  // gamma * e_1 for reproducibility. Happens at t = 0 when the model has no
  // input sensitivity yet; the policy must not crash there.
  if (p.b.isZero(0.0) && p.Q.isZero(0.0)) {
    VectorXd u = VectorXd::Zero(m);
    u[0] = gamma;
    return BallSolution{u, 0.0, 0.0, 0.0};
  }

  VectorXd w(m);
  double mu;
  const auto root = secular_root(alphas, c, gamma);
  if (root.has_value()) {
    mu = *root;
    for (Eigen::Index i = 0; i < m; ++i) w[i] = c[i] / (alphas[i] + mu);
  } else {
    // Hard case: particular solution on the non-dominant eigenspace at
    // mu = -alpha_max, completed along the dominant eigenvector to reach the
    // boundary. Also covers b = 0, where the answer is the dominant
    // eigenvector itself.
    mu = -alpha_max;
    const double gap_tol = 1e-12 * std::max(1.0, std::abs(alpha_max));
    double part_sq = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (alphas[i] < alpha_max - gap_tol) {
        w[i] = c[i] / (alphas[i] + mu);
        part_sq += w[i] * w[i];
      } else {
        w[i] = 0.0;
      }
    }
    if (part_sq > gamma * gamma) {
      throw SolverFailure("solve_ball_qp: hard-case particular exceeds ball");
    }
    const double t = std::sqrt(std::max(0.0, gamma * gamma - part_sq));

    // Dominant eigenvector, canonically signed in the original coordinates.
    Eigen::Index dom = m - 1;
    VectorXd e_dom = canonical_sign(basis.col(dom));
    VectorXd u = basis * w + t * e_dom;
    const double objective = u.dot(p.Q * u) - 2.0 * p.b.dot(u);
    const double kkt = ((p.Q + mu * MatrixXd::Identity(m, m)) * u - p.b).norm();
    return BallSolution{u, mu, objective, kkt};
  }

  VectorXd u = basis * w;
  const double norm_err = std::abs(u.norm() - gamma);
  if (norm_err > 1e-9 * std::max(1.0, gamma)) {
    throw SolverFailure("solve_ball_qp: boundary condition violated");
  }
  // Exact renormalization keeps downstream feasibility checks tight.
  u *= gamma / u.norm();

  const double objective = u.dot(p.Q * u) - 2.0 * p.b.dot(u);
  const double kkt = ((p.Q + mu * MatrixXd::Identity(m, m)) * u - p.b).norm();
  return BallSolution{u, mu, objective, kkt};
}

}  // namespace flex
