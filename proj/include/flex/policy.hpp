#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flex/ball_solver.hpp"
#include "flex/gram.hpp"
#include "flex/model.hpp"
#include "flex/rng.hpp"

namespace flex {

struct PolicyConfig {
  double gamma = 1.0;  // input norm bound

  enum class RowSelection { RoundRobin, Random, Fixed };
  RowSelection row_selection = RowSelection::RoundRobin;
  int fixed_row = 0;

  std::uint64_t seed = 0;

  // periodic baseline
  double omega0 = 1.0;

  // uniform baseline
  int gradient_steps = 100;
  double gradient_step_factor = 0.1;  // step size = factor * gamma

  // episodic baseline
  int horizon = 50;
  int plan_iterations = 200;
  double plan_step_factor = 0.05;  // step size = factor * gamma
};

// Everything a policy may look at when choosing the next input. Policies are
// Markov in (x_t, theta_t, M_t) plus their own small mutable state.
struct PolicyContext {
  const Model* model = nullptr;
  const VectorXd* theta = nullptr;
  const GramState* gram = nullptr;
  const VectorXd* x = nullptr;
  const std::vector<VectorXd>* state_history = nullptr;  // x_0..x_t
  long step_index = 0;
  double time = 0.0;
  double dt = 0.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual VectorXd act(const PolicyContext& ctx) = 0;
};

// One greedy exploration step: predict the zero-input next state, linearize
// the selected feature row there, and solve the resulting ball-constrained
// quadratic maximization exactly. Row index k is 0-based. When the one-step
// feature-input coupling D B is structurally zero (relative-degree-2 systems
// such as a double integrator with position-only features), the
// linearization is taken one more step ahead so the input keeps leverage on
// the gain.
VectorXd flex_input(const Model& model, const VectorXd& theta,
                    const GramState& gram, const VectorXd& x, double dt,
                    double gamma, int k);

class FlexPolicy : public Policy {
 public:
  explicit FlexPolicy(PolicyConfig cfg);
  std::string name() const override { return "flex"; }
  VectorXd act(const PolicyContext& ctx) override;

 private:
  int select_row(const PolicyContext& ctx, const VectorXd& x_pred);
  PolicyConfig cfg_;
  Rng rng_;
  int cursor_ = 0;
};

// u ~ (gamma / sqrt(m)) U([-1, 1]^m)
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(PolicyConfig cfg);
  std::string name() const override { return "random"; }
  VectorXd act(const PolicyContext& ctx) override;

 private:
  PolicyConfig cfg_;
  Rng rng_;
};

// u_t = gamma sin(omega0 * t * dt), the resonant oracle for pendulum-like
// systems; scaled by 1/sqrt(m) per coordinate when m > 1.
class PeriodicPolicy : public Policy {
 public:
  explicit PeriodicPolicy(PolicyConfig cfg);
  std::string name() const override { return "periodic"; }
  VectorXd act(const PolicyContext& ctx) override;

 private:
  PolicyConfig cfg_;
};

// Maximizes the spread of trajectory points: projected gradient ascent on
// u -> 1/2 sum_s ||x(u) - x_s||^2 with the one-step prediction x(u).
class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(PolicyConfig cfg);
  std::string name() const override { return "uniform"; }
  VectorXd act(const PolicyContext& ctx) override;

 private:
  PolicyConfig cfg_;
};

// Plans an input sequence maximizing logdet of the predicted Gram matrix over
// a horizon through a noise-free differentiable rollout, then replays it one
// input per step until the next replan.
class EpisodicPolicy : public Policy {
 public:
  explicit EpisodicPolicy(PolicyConfig cfg);
  std::string name() const override { return "episodic"; }
  VectorXd act(const PolicyContext& ctx) override;

 private:
  PolicyConfig cfg_;
  std::vector<VectorXd> plan_;
  std::size_t cursor_ = 0;
};

// The episodic planner, exposed for tests. Maximizes
//   logdet(M_current + sum_{s=1..H} V(x_s, 0)^T V(x_s, 0))
// over (u_0..u_{H-1}) with x_{s+1} = x_s + dt f(x_s, u_s, theta), inputs
// projected onto the gamma ball, gradients by backpropagation through the
// rollout. Feature matrices are evaluated at the visited states with zero
// input, matching the one-step objective of the greedy policy.
std::vector<VectorXd> episodic_plan(const Model& model, const VectorXd& theta,
                                    const MatrixXd& gram_matrix,
                                    const VectorXd& x, int horizon, double dt,
                                    const PolicyConfig& cfg);

}  // namespace flex
