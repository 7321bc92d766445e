#pragma once

#include "flex/types.hpp"

namespace flex {

// One-hidden-layer tanh network with all first and mixed second derivatives
// in closed form. Parameters are packed row-major as
// [W1 (hidden x in), b1, W2 (out x hidden), b2], so a single flat theta can
// be shared with the learners without any framework in between.
class Mlp {
 public:
  Mlp(int in, int hidden, int out);

  int input_dim() const { return in_; }
  int output_dim() const { return out_; }
  int hidden_dim() const { return hidden_; }
  int param_dim() const { return n_; }

  VectorXd forward(const VectorXd& theta, const VectorXd& p) const;

  // dy/dtheta, out x n
  MatrixXd param_jacobian(const VectorXd& theta, const VectorXd& p) const;

  // dy/dp, out x in
  MatrixXd input_jacobian(const VectorXd& theta, const VectorXd& p) const;

  // d^2 y_k / dp dtheta, n x in
  MatrixXd mixed_jacobian(const VectorXd& theta, const VectorXd& p,
                          int k) const;

  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer.
  VectorXd init_params(std::uint64_t seed) const;

 private:
  struct Views;  // unpacked weight views over theta
  Views unpack(const VectorXd& theta) const;
  void check(const VectorXd& theta, const VectorXd& p) const;

  int in_, hidden_, out_, n_;
};

}  // namespace flex
