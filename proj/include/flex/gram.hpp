#pragma once

#include <iosfwd>

#include "flex/types.hpp"

namespace flex {

// Gram matrix M of the model features accumulated along a trajectory,
// together with its inverse and log-determinant, maintained incrementally.
// M starts at eps * I so it is invertible before n feature rows have arrived,
// and stays symmetric positive definite because every update adds v v^T.
//
// The inverse is advanced by Sherman-Morrison and the log-determinant by the
// matrix determinant lemma. Round-off accumulates, so the state re-factorizes
// from M directly every kRefactorStride updates, or as soon as a residual
// probe M * (M_inv * v) - v drifts past tolerance.
class GramState {
 public:
  GramState(int n, double eps_reg);

  int dim() const { return n_; }
  long count() const { return count_; }
  const MatrixXd& matrix() const { return m_; }
  const MatrixXd& inverse() const { return m_inv_; }
  double logdet() const { return logdet_; }

  // M += v v^T
  void rank_one_update(const VectorXd& v);

  // M += V^T V, equivalent to absorbing the rows of V one at a time.
  void block_update(const MatrixXd& rows);

  // Rank-one information gain of a candidate feature row:
  //   logdet M + v^T M^{-1} v.
  // Monotone in the quadratic form, so candidate ordering matches the exact
  // gain below; this is the quantity the policy ranks by.
  double info_gain(const VectorXd& v) const;

  // Exact gain logdet(M + v v^T) = logdet M + log(1 + v^T M^{-1} v), reported
  // in run traces.
  double exact_gain(const VectorXd& v) const;

  double quad_form(const VectorXd& v) const;

  // Max-abs entry of M * M_inv - I; drives the drift invariant.
  double identity_residual() const;

  // Dense re-factorization of the inverse and log-determinant from M.
  void refactor();

  // Row-major full-precision text dump of M, one row per line.
  void dump(std::ostream& os) const;

 private:
  int n_;
  MatrixXd m_;
  MatrixXd m_inv_;
  double logdet_;
  long count_ = 0;
  long updates_since_refactor_ = 0;

  static constexpr long kRefactorStride = 256;
  // Stricter than the 1e-6 identity invariant: the RLS estimate reads the
  // inverse directly, so drift there shows up one-for-one in theta.
  static constexpr double kProbeTolerance = 1e-9;
};

}  // namespace flex
