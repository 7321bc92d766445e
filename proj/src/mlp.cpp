#include "flex/mlp.hpp"

#include <cmath>

#include "flex/rng.hpp"

namespace flex {

using RowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct Mlp::Views {
  RowMajorMap w1;
  Eigen::Map<const VectorXd> b1;
  RowMajorMap w2;
  Eigen::Map<const VectorXd> b2;
};

Mlp::Mlp(int in, int hidden, int out) : in_(in), hidden_(hidden), out_(out) {
  require(in >= 1 && hidden >= 1 && out >= 1, "Mlp: bad dimensions");
  n_ = hidden * in + hidden + out * hidden + out;
}

Mlp::Views Mlp::unpack(const VectorXd& theta) const {
  const double* p = theta.data();
  const int w1n = hidden_ * in_;
  const int w2n = out_ * hidden_;
  return Views{RowMajorMap(p, hidden_, in_),
               Eigen::Map<const VectorXd>(p + w1n, hidden_),
               RowMajorMap(p + w1n + hidden_, out_, hidden_),
               Eigen::Map<const VectorXd>(p + w1n + hidden_ + w2n, out_)};
}

void Mlp::check(const VectorXd& theta, const VectorXd& p) const {
  require(theta.size() == n_, "Mlp: theta dimension mismatch");
  require(p.size() == in_, "Mlp: input dimension mismatch");
}

VectorXd Mlp::forward(const VectorXd& theta, const VectorXd& p) const {
  check(theta, p);
  const Views v = unpack(theta);
  const VectorXd s = (v.w1 * p + v.b1).array().tanh();
  return v.w2 * s + v.b2;
}

MatrixXd Mlp::param_jacobian(const VectorXd& theta, const VectorXd& p) const {
  check(theta, p);
  const Views v = unpack(theta);
  const VectorXd s = (v.w1 * p + v.b1).array().tanh();
  const VectorXd sp = 1.0 - s.array().square();  // tanh'

  MatrixXd jac = MatrixXd::Zero(out_, n_);
  const int w1n = hidden_ * in_;
  const int w2off = w1n + hidden_;
  const int b2off = w2off + out_ * hidden_;
  for (int k = 0; k < out_; ++k) {
    for (int i = 0; i < hidden_; ++i) {
      const double gate = v.w2(k, i) * sp[i];
      for (int j = 0; j < in_; ++j) jac(k, i * in_ + j) = gate * p[j];
      jac(k, w1n + i) = gate;            // b1
      jac(k, w2off + k * hidden_ + i) = s[i];  // W2 row k
    }
    jac(k, b2off + k) = 1.0;  // b2
  }
  return jac;
}

MatrixXd Mlp::input_jacobian(const VectorXd& theta, const VectorXd& p) const {
  check(theta, p);
  const Views v = unpack(theta);
  const VectorXd s = (v.w1 * p + v.b1).array().tanh();
  const VectorXd sp = 1.0 - s.array().square();
  return v.w2 * sp.asDiagonal() * v.w1;
}

MatrixXd Mlp::mixed_jacobian(const VectorXd& theta, const VectorXd& p,
                             int k) const {
  check(theta, p);
  require(k >= 0 && k < out_, "Mlp: output index out of range");
  const Views v = unpack(theta);
  const VectorXd s = (v.w1 * p + v.b1).array().tanh();
  const VectorXd sp = 1.0 - s.array().square();
  const VectorXd spp = -2.0 * s.array() * sp.array();  // tanh''

  MatrixXd mixed = MatrixXd::Zero(n_, in_);
  const int w1n = hidden_ * in_;
  const int w2off = w1n + hidden_;
  for (int i = 0; i < hidden_; ++i) {
    const double w2ki = v.w2(k, i);
    for (int l = 0; l < in_; ++l) {
      const double chain = v.w1(i, l);  // da_i / dp_l
      // W1(i, j): w2ki * (spp_i * chain * p_j + sp_i * [j == l])
      for (int j = 0; j < in_; ++j) {
        mixed(i * in_ + j, l) = w2ki * spp[i] * chain * p[j];
      }
      mixed(i * in_ + l, l) += w2ki * sp[i];
      mixed(w1n + i, l) = w2ki * spp[i] * chain;        // b1(i)
      mixed(w2off + k * hidden_ + i, l) = sp[i] * chain;  // W2(k, i)
    }
  }
  // b2 has no input dependence: rows stay zero.
  return mixed;
}

VectorXd Mlp::init_params(std::uint64_t seed) const {
  Rng rng(seed);
  VectorXd theta(n_);
  const double lim1 = 1.0 / std::sqrt(static_cast<double>(in_));
  const double lim2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  const int w1n = hidden_ * in_ + hidden_;  // W1 and b1
  for (int i = 0; i < w1n; ++i) theta[i] = rng.uniform(-lim1, lim1);
  for (int i = w1n; i < n_; ++i) theta[i] = rng.uniform(-lim2, lim2);
  return theta;
}

}  // namespace flex
