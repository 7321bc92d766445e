#pragma once

#include <functional>
#include <utility>

#include "flex/mlp.hpp"
#include "flex/model.hpp"

namespace flex {

// ---------------------------------------------------------------------------
// Linear-in-parameter models
// ---------------------------------------------------------------------------

// Damped pendulum known up to theta = (omega0^2, alpha, b):
//   f(q, qdot, u) = (qdot, -omega0^2 sin q - alpha qdot + b u).
class PendulumLinearModel : public LinearModelBase {
 public:
  PendulumLinearModel() : LinearModelBase(2, 1, 3) {}
  std::string name() const override { return "pendulum_linear"; }

  MatrixXd feature_matrix(const StateAction& z) const override;
  VectorXd offset(const StateAction& z) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;
};

// Generic affine-in-theta model assembled from callables; analytic jacobians
// optional, with central-difference fallbacks.
class CustomLinearModel : public LinearModelBase {
 public:
  using FeatureFn = std::function<MatrixXd(const StateAction&)>;
  using OffsetFn = std::function<VectorXd(const StateAction&)>;
  using RowStateJacFn = std::function<MatrixXd(const StateAction&, int)>;

  CustomLinearModel(int d, int m, int n, FeatureFn features, OffsetFn offset,
                    RowStateJacFn row_state_jac = nullptr);

  std::string name() const override { return "custom_linear"; }
  MatrixXd feature_matrix(const StateAction& z) const override;
  VectorXd offset(const StateAction& z) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;

 private:
  FeatureFn feature_fn_;
  OffsetFn offset_fn_;
  RowStateJacFn row_state_jac_fn_;
};

// Matrix model f(z, Theta) = Theta * phi(z), stored as the row-major
// vectorization theta = vec(Theta) with block-diagonal features
// V = diag(phi^T, ..., phi^T).
class MatrixFeatureModel : public LinearModelBase {
 public:
  struct FeatureMap {
    int dim;  // n' = dim of phi
    std::function<VectorXd(const StateAction&)> phi;
    std::function<MatrixXd(const StateAction&)> dphi_dx;  // n' x d
    std::function<MatrixXd(const StateAction&)> dphi_du;  // n' x m
  };

  MatrixFeatureModel(int d, int m, FeatureMap map);

  std::string name() const override { return "matrix_features"; }
  int feature_dim() const { return map_.dim; }
  VectorXd phi(const StateAction& z) const { return map_.phi(z); }

  MatrixXd feature_matrix(const StateAction& z) const override;
  VectorXd offset(const StateAction& z) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;

 private:
  MatrixXd theta_as_matrix(const VectorXd& theta) const;  // d x n'
  FeatureMap map_;
};

// Chain of N coupled damped pendulums with unknown per-joint friction
// theta in R^N; everything else (gravity, coupling, actuation) is known.
// State layout (q_1..q_N, qdot_1..qdot_N); only joint 1 is driven.
class ChainLinearModel : public LinearModelBase {
 public:
  ChainLinearModel(int n_joints, double omega0_sq, double coupling,
                   double input_gain);

  std::string name() const override { return "chain_linear"; }
  MatrixXd feature_matrix(const StateAction& z) const override;
  VectorXd offset(const StateAction& z) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;

 private:
  int joints_;
  double omega0_sq_, coupling_, input_gain_;
};

// ---------------------------------------------------------------------------
// Neural models
// ---------------------------------------------------------------------------

// Plain network over the concatenated state-action pair, f(z) = net([x; u]).
class MlpModel : public Model {
 public:
  MlpModel(int d, int m, int hidden = 8);

  std::string name() const override { return "mlp"; }
  const Mlp& net() const { return net_; }
  VectorXd init_params(std::uint64_t seed) const { return net_.init_params(seed); }

  VectorXd predict(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd features(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;

 private:
  Mlp net_;
};

// Cartpole parametrization f(z, theta) = a_theta(xi) + u * b_theta(xi) with
// xi = (q_x, qdot_x, cos q_phi, sin q_phi, qdot_phi); one network outputs the
// stacked pair (a, b).
class CartpoleMlpModel : public Model {
 public:
  explicit CartpoleMlpModel(int hidden = 8);

  std::string name() const override { return "cartpole_mlp"; }
  VectorXd init_params(std::uint64_t seed) const { return net_.init_params(seed); }

  VectorXd predict(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd features(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;

 private:
  static VectorXd embed(const VectorXd& x);
  static MatrixXd embed_jacobian(const VectorXd& x);
  Mlp net_;
};

// Two-joint arm: a network learns the drift f(., u = 0) from the
// trig-embedded observation xi = (cos q1, sin q1, qdot1, cos q2, sin q2,
// qdot2); the torque map into the velocity rows is known.
class ArmMlpModel : public Model {
 public:
  explicit ArmMlpModel(int hidden = 8);

  std::string name() const override { return "arm_mlp"; }
  VectorXd init_params(std::uint64_t seed) const { return net_.init_params(seed); }

  VectorXd predict(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd features(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;

 private:
  static VectorXd embed(const VectorXd& x);
  static MatrixXd embed_jacobian(const VectorXd& x);
  Mlp net_;
};

// Planar quadrotor with known rigid-body terms; a network learns the
// velocity-dependent friction residual on the two translational
// accelerations. State layout (qx, qdot_x, qy, qdot_y, qphi, qdot_phi).
class QuadrotorResidualModel : public Model {
 public:
  struct Body {
    double mass = 0.5;
    double inertia = 0.01;
    double arm = 0.25;
    double gravity = 9.81;
  };

  explicit QuadrotorResidualModel(Body body, int hidden = 8);

  std::string name() const override { return "quadrotor_residual"; }
  VectorXd init_params(std::uint64_t seed) const { return net_.init_params(seed); }

  VectorXd predict(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd features(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;

 private:
  Body body_;
  Mlp net_;
};

// ---------------------------------------------------------------------------
// Star-field model
// ---------------------------------------------------------------------------

// Spaceship in a force field known down to theta = (kappa_x, kappa_y, rho):
// the acceleration is -dir(q) / (1 + ||q - kappa||^2 / rho^2) + u, with
// dir either q/||q|| (the published form) or (q - kappa)/||q - kappa||
// (the star-centered variant); both carry full analytic derivatives.
// State layout (qx, qdot_x, qy, qdot_y).
class StarFieldModel : public Model {
 public:
  enum class ForceCenter { Origin, Star };

  explicit StarFieldModel(ForceCenter center = ForceCenter::Origin);

  std::string name() const override { return "star_field"; }
  ForceCenter center() const { return center_; }

  VectorXd predict(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd features(const StateAction& z, const VectorXd& theta) const override;
  MatrixXd feature_state_jacobian(const StateAction& z, const VectorXd& theta,
                                  int k) const override;
  MatrixXd input_jacobian(const VectorXd& x, const VectorXd& theta,
                          double dt) const override;
  MatrixXd state_jacobian(const StateAction& z,
                          const VectorXd& theta) const override;

  // Acceleration field shared with the simulator so the model class is the
  // single source of truth for the force formula.
  static Eigen::Vector2d force(const Eigen::Vector2d& q, double kx, double ky,
                               double rho, ForceCenter center);

 private:
  ForceCenter center_;
};

}  // namespace flex
