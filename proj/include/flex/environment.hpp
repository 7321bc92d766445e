#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flex/models.hpp"
#include "flex/rng.hpp"
#include "flex/types.hpp"

namespace flex {

struct SimulationDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation-grid description. Extents are not hardcoded here: they come from
// the per-environment config files shipped with the repo.
struct GridSpec {
  enum class Kind { Regular, Halton };
  Kind kind = Kind::Regular;
  VectorXd lo;
  VectorXd hi;
  std::vector<int> counts;  // regular: points per dimension
  int count = 0;            // halton: total points
};

// Deterministic grid of state points paired with u = 0.
std::vector<StateAction> build_grid(const GridSpec& spec, int input_dim);

// Ground-truth simulator: Euler step of the drift plus isotropic Gaussian
// noise, with the input clipped to the gamma ball (counted, not rejected).
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  int state_dim() const { return d_; }
  int input_dim() const { return m_; }
  double dt() const { return dt_; }
  double sigma() const { return sigma_; }
  double gamma() const { return gamma_; }
  const VectorXd& initial_state() const { return x0_; }

  virtual VectorXd drift(const VectorXd& x, const VectorXd& u,
                         double t) const = 0;

  VectorXd step(const VectorXd& x, const VectorXd& u, double t, Rng& rng);

  std::vector<StateAction> eval_grid() const { return build_grid(grid_, m_); }
  const GridSpec& grid_spec() const { return grid_; }

  long clip_count() const { return clip_count_; }

 protected:
  Environment(int d, int m, double dt, double sigma, double gamma, VectorXd x0,
              GridSpec grid);

  int d_, m_;
  double dt_, sigma_, gamma_;
  VectorXd x0_;
  GridSpec grid_;
  long clip_count_ = 0;
};

class PendulumEnv : public Environment {
 public:
  struct Params {
    double omega0_sq = 1.0;
    double alpha = 0.1;
    double b = 1.0;
  };

  PendulumEnv(Params p, double dt, double sigma, double gamma, VectorXd x0,
              GridSpec grid);

  std::string name() const override { return "pendulum"; }
  VectorXd drift(const VectorXd& x, const VectorXd& u, double t) const override;
  const Params& params() const { return params_; }

 private:
  Params params_;
};

// Planar quadrotor with quadratic velocity friction on the translations.
// State (qx, qdot_x, qy, qdot_y, qphi, qdot_phi), inputs the two rotor
// thrusts.
class QuadrotorEnv : public Environment {
 public:
  struct Params {
    double mass = 0.5;
    double inertia = 0.01;
    double arm = 0.25;
    double friction = 0.1;
    double gravity = 9.81;
  };

  QuadrotorEnv(Params p, double dt, double sigma, double gamma, VectorXd x0,
               GridSpec grid);

  std::string name() const override { return "quadrotor"; }
  VectorXd drift(const VectorXd& x, const VectorXd& u, double t) const override;
  const Params& params() const { return params_; }
  QuadrotorResidualModel::Body body() const;

 private:
  Params params_;
};

// Frictionless cart-pole, force on the cart. State (qx, qdot_x, qphi,
// qdot_phi) with the pole angle measured from upright.
class CartpoleEnv : public Environment {
 public:
  struct Params {
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double half_length = 0.5;
    double gravity = 9.8;
  };

  CartpoleEnv(Params p, double dt, double sigma, double gamma, VectorXd x0,
              GridSpec grid);

  std::string name() const override { return "cartpole"; }
  VectorXd drift(const VectorXd& x, const VectorXd& u, double t) const override;
  const Params& params() const { return params_; }

 private:
  Params params_;
};

// Planar two-link arm with torques at both joints, point masses at the link
// ends, angles measured from the hanging position. State (q1, qdot1, q2,
// qdot2), q2 relative to link 1.
class ArmEnv : public Environment {
 public:
  struct Params {
    double m1 = 1.0;
    double m2 = 1.0;
    double l1 = 1.0;
    double l2 = 1.0;
    double gravity = 9.81;
  };

  ArmEnv(Params p, double dt, double sigma, double gamma, VectorXd x0,
         GridSpec grid);

  std::string name() const override { return "arm"; }
  VectorXd drift(const VectorXd& x, const VectorXd& u, double t) const override;
  const Params& params() const { return params_; }

 private:
  Params params_;
};

// Time-varying force field: the star orbits the unit circle with the given
// period; acceleration control. The force formula is shared with
// StarFieldModel so the agents' knowledge matches the simulator exactly.
class StarFieldEnv : public Environment {
 public:
  struct Params {
    double rho = 0.5;
    double period = 100.0;  // time units for one revolution
    StarFieldModel::ForceCenter center = StarFieldModel::ForceCenter::Origin;
  };

  StarFieldEnv(Params p, double dt, double sigma, double gamma, VectorXd x0,
               GridSpec grid);

  std::string name() const override { return "star_field"; }
  VectorXd drift(const VectorXd& x, const VectorXd& u, double t) const override;
  const Params& params() const { return params_; }

  Eigen::Vector2d star_position(double t) const;
  // (kappa_x(t), kappa_y(t), rho): the moving ground-truth parameter vector.
  VectorXd theta_star(double t) const;

 private:
  Params params_;
};

// Chain of N coupled damped pendulums, torque on the first joint only.
// State (q_1..q_N, qdot_1..qdot_N).
class ChainEnv : public Environment {
 public:
  struct Params {
    double omega0_sq = 1.0;
    double coupling = 1.0;
    double input_gain = 1.0;
    VectorXd friction;  // per-joint true coefficients, size N
  };

  ChainEnv(int n_joints, Params p, double dt, double sigma, double gamma,
           VectorXd x0, GridSpec grid);

  std::string name() const override { return "chain"; }
  VectorXd drift(const VectorXd& x, const VectorXd& u, double t) const override;
  const Params& params() const { return params_; }
  int joints() const { return joints_; }

 private:
  int joints_;
  Params params_;
};

}  // namespace flex
