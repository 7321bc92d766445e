#include "flex/gram.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Cholesky>

namespace flex {

GramState::GramState(int n, double eps_reg) {
  require(n >= 1, "GramState: dimension must be positive");
  require(eps_reg > 0.0 && std::isfinite(eps_reg),
          "GramState: eps_reg must be positive and finite");
  n_ = n;
  m_ = eps_reg * MatrixXd::Identity(n, n);
  m_inv_ = (1.0 / eps_reg) * MatrixXd::Identity(n, n);
  logdet_ = n * std::log(eps_reg);
}

void GramState::rank_one_update(const VectorXd& v) {
  require(v.size() == n_, "rank_one_update: dimension mismatch");
  require(v.allFinite(), "rank_one_update: non-finite entries");

  m_.selfadjointView<Eigen::Lower>().rankUpdate(v);
  m_ = m_.selfadjointView<Eigen::Lower>();
  ++count_;
  ++updates_since_refactor_;

  const VectorXd w = m_inv_ * v;  // M^{-1} v before the update
  const double q = v.dot(w);

  // Probe the inverse along the update direction: residual of the *old*
  // inverse against the old M is (M - vv^T)(w) - v + vv^T w ... cheapest
  // reliable check is against the new M after the Sherman-Morrison step.
  bool healthy = q > -0.5 && std::isfinite(q);
  if (healthy) {
    m_inv_.noalias() -= (w * w.transpose()) / (1.0 + q);
    m_inv_ = 0.5 * (m_inv_ + m_inv_.transpose()).eval();
    logdet_ += std::log1p(q);

    const VectorXd probe = m_ * (m_inv_ * v) - v;
    const double scale = 1.0 + v.lpNorm<Eigen::Infinity>();
    healthy = probe.allFinite() &&
              probe.lpNorm<Eigen::Infinity>() <= kProbeTolerance * scale;
  }

  if (!healthy || updates_since_refactor_ >= kRefactorStride) {
    refactor();
  }
}

void GramState::block_update(const MatrixXd& rows) {
  require(rows.cols() == n_, "block_update: dimension mismatch");
  require(rows.rows() >= 1, "block_update: empty block");
  require(rows.allFinite(), "block_update: non-finite entries");
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    rank_one_update(rows.row(k).transpose());
  }
}

double GramState::quad_form(const VectorXd& v) const {
  require(v.size() == n_, "quad_form: dimension mismatch");
  require(v.allFinite(), "quad_form: non-finite entries");
  return v.dot(m_inv_ * v);
}

double GramState::info_gain(const VectorXd& v) const {
  return logdet_ + quad_form(v);
}

double GramState::exact_gain(const VectorXd& v) const {
  return logdet_ + std::log1p(quad_form(v));
}

double GramState::identity_residual() const {
  return (m_ * m_inv_ - MatrixXd::Identity(n_, n_))
      .cwiseAbs()
      .maxCoeff();
}

void GramState::refactor() {
  Eigen::LDLT<MatrixXd> ldlt(m_);
  m_inv_ = ldlt.solve(MatrixXd::Identity(n_, n_));
  m_inv_ = 0.5 * (m_inv_ + m_inv_.transpose()).eval();
  logdet_ = ldlt.vectorD().array().log().sum();
  updates_since_refactor_ = 0;
}

void GramState::dump(std::ostream& os) const {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ",
                            "\n");
  os << m_.format(fmt) << "\n";
}

}  // namespace flex
