#pragma once

#include <iosfwd>
#include <string>

#include "flex/types.hpp"

namespace flex {

// Parametric dynamics model f(z, theta) together with the derivative suite
// the exploration policy needs. All operations are pure given (z, theta).
//
// Dimensions: d states, m inputs, n parameters. Derivative contracts:
//   features              d x n   parameter Jacobian df/dtheta
//   feature_row           n       one row of the parameter Jacobian
//   feature_state_jacobian n x d  mixed derivative d^2 f_k / dx dtheta
//   input_jacobian        d x m   dt * df/du evaluated at u = 0
//   state_jacobian        d x d   df/dx
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  int state_dim() const { return d_; }
  int input_dim() const { return m_; }
  int param_dim() const { return n_; }
  virtual bool exactly_linear() const { return false; }
  // every shipped model carries its full derivative suite
  virtual bool differentiable() const { return true; }

  virtual VectorXd predict(const StateAction& z, const VectorXd& theta) const = 0;

  virtual MatrixXd features(const StateAction& z, const VectorXd& theta) const = 0;

  virtual VectorXd feature_row(const StateAction& z, const VectorXd& theta,
                               int k) const {
    check_row(k);
    return features(z, theta).row(k).transpose();
  }

  virtual MatrixXd feature_state_jacobian(const StateAction& z,
                                          const VectorXd& theta,
                                          int k) const = 0;

  virtual MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                                  double dt) const = 0;

  // Default is central finite differences; concrete models override with the
  // closed form.
  virtual MatrixXd state_jacobian(const StateAction& z,
                                  const VectorXd& theta) const;

 protected:
  Model(int d, int m, int n) : d_(d), m_(m), n_(n) {
    require(d >= 1 && m >= 0 && n >= 1, "Model: bad dimensions");
  }

  void check_z(const StateAction& z) const {
    require(z.x.size() == d_ && z.u.size() == m_, "Model: z dimension mismatch");
  }
  void check_theta(const VectorXd& theta) const {
    require(theta.size() == n_, "Model: theta dimension mismatch");
    require(theta.allFinite(), "Model: non-finite theta");
  }
  void check_row(int k) const {
    require(k >= 0 && k < d_, "Model: feature row index out of range");
  }

  int d_, m_, n_;
};

// Models with an affine parameter dependence f(z, theta) = V(z) theta + c(z).
// The feature matrix is independent of theta, which is what makes exact
// recursive least squares applicable.
class LinearModelBase : public Model {
 public:
  using Model::Model;

  bool exactly_linear() const final { return true; }

  virtual MatrixXd feature_matrix(const StateAction& z) const = 0;
  virtual VectorXd offset(const StateAction& z) const = 0;

  VectorXd predict(const StateAction& z, const VectorXd& theta) const override {
    check_z(z);
    check_theta(theta);
    return feature_matrix(z) * theta + offset(z);
  }

  MatrixXd features(const StateAction& z, const VectorXd& theta) const override {
    check_z(z);
    check_theta(theta);
    return feature_matrix(z);
  }
};

// Flat decimal text serialization of a parameter vector with a model header.
void save_params(std::ostream& os, const Model& model, const VectorXd& theta);
VectorXd load_params(std::istream& is, std::string* model_name = nullptr);

}  // namespace flex
