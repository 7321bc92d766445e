#include "flex/policy.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace flex {

namespace {

VectorXd project_to_ball(VectorXd u, double gamma) {
  const double norm = u.norm();
  if (norm > gamma) u *= gamma / norm;
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------
// FLEX
// ---------------------------------------------------------------------------

VectorXd flex_input(const Model& model, const VectorXd& theta,
                    const GramState& gram, const VectorXd& x, double dt,
                    double gamma, int k) {
  require(gram.dim() == model.param_dim(), "flex_input: gram dimension mismatch");
  const int m = model.input_dim();
  const VectorXd u0 = VectorXd::Zero(m);

  // Zero-input one-step prediction: the linearization point for the features.
  const StateAction z_now(x, u0);
  const VectorXd x_pred = x + dt * model.predict(z_now, theta);
  const StateAction z_pred(x_pred, u0);

  VectorXd v = model.feature_row(z_pred, theta, k);
  MatrixXd d_mix = model.feature_state_jacobian(z_pred, theta, k);
  const MatrixXd b_in = model.input_jacobian(x, theta, dt);

  MatrixXd db = d_mix * b_in;  // n x m

  // Relative-degree-2 systems (position-only features driven through
  // velocity, e.g. a double integrator) have D B identically zero: the input
  // reaches the features only one step later. Push the linearization one
  // more zero-input step ahead, where the input sensitivity
  // (I + dt df/dx) B is order dt^2 but nonzero.
  const double coupling_scale =
      d_mix.norm() * b_in.norm() + v.norm() * b_in.norm();
  if (db.norm() <= 1e-12 * (1.0 + coupling_scale) && b_in.norm() > 0.0) {
    const VectorXd x_pred2 = x_pred + dt * model.predict(z_pred, theta);
    const StateAction z_pred2(x_pred2, u0);
    const MatrixXd b_two =
        (MatrixXd::Identity(model.state_dim(), model.state_dim()) +
         dt * model.state_jacobian(z_pred, theta)) *
        b_in;
    v = model.feature_row(z_pred2, theta, k);
    d_mix = model.feature_state_jacobian(z_pred2, theta, k);
    db = d_mix * b_two;
  }

  const MatrixXd minv_db = gram.inverse() * db;  // n x m
  MatrixXd q_mat = db.transpose() * minv_db;     // m x m
  q_mat = 0.5 * (q_mat + q_mat.transpose()).eval();
  const VectorXd b_vec = -db.transpose() * (gram.inverse() * v);

  const BallSolution sol = solve_ball_qp(QuadraticSubproblem(q_mat, b_vec, gamma));
  require(sol.u_star.allFinite(), "flex_input: non-finite input");
  return sol.u_star;
}

FlexPolicy::FlexPolicy(PolicyConfig cfg)
    : cfg_(cfg), rng_(Rng(cfg.seed).fork(17)) {}

int FlexPolicy::select_row(const PolicyContext& ctx, const VectorXd& x_pred) {
  const int d = ctx.model->state_dim();
  switch (cfg_.row_selection) {
    case PolicyConfig::RowSelection::Fixed:
      require(cfg_.fixed_row >= 0 && cfg_.fixed_row < d,
              "FlexPolicy: fixed row out of range");
      return cfg_.fixed_row;
    case PolicyConfig::RowSelection::Random:
      return static_cast<int>(rng_.next_u64() % static_cast<std::uint64_t>(d));
    case PolicyConfig::RowSelection::RoundRobin:
    default: {
      // Cycle over rows, skipping rows whose feature gradient vanishes at the
      // predicted state (identically-zero rows would waste the step).
      const StateAction z_pred(x_pred, VectorXd::Zero(ctx.model->input_dim()));
      for (int tries = 0; tries < d; ++tries) {
        const int k = cursor_;
        cursor_ = (cursor_ + 1) % d;
        if (ctx.model->feature_row(z_pred, *ctx.theta, k).norm() > 0.0) {
          return k;
        }
      }
      return cursor_;
    }
  }
}

VectorXd FlexPolicy::act(const PolicyContext& ctx) {
  const VectorXd u0 = VectorXd::Zero(ctx.model->input_dim());
  const StateAction z_now(*ctx.x, u0);
  const VectorXd x_pred = *ctx.x + ctx.dt * ctx.model->predict(z_now, *ctx.theta);
  const int k = select_row(ctx, x_pred);
  return flex_input(*ctx.model, *ctx.theta, *ctx.gram, *ctx.x, ctx.dt,
                    cfg_.gamma, k);
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

RandomPolicy::RandomPolicy(PolicyConfig cfg)
    : cfg_(cfg), rng_(Rng(cfg.seed).fork(23)) {}

VectorXd RandomPolicy::act(const PolicyContext& ctx) {
  const int m = ctx.model->input_dim();
  const double scale = cfg_.gamma / std::sqrt(static_cast<double>(m));
  VectorXd u(m);
  for (int i = 0; i < m; ++i) u[i] = scale * rng_.uniform(-1.0, 1.0);
  return u;
}

PeriodicPolicy::PeriodicPolicy(PolicyConfig cfg) : cfg_(cfg) {}

VectorXd PeriodicPolicy::act(const PolicyContext& ctx) {
  const int m = ctx.model->input_dim();
  const double amplitude = cfg_.gamma / std::sqrt(static_cast<double>(m));
  const double value =
      amplitude * std::sin(cfg_.omega0 * static_cast<double>(ctx.step_index) *
                           ctx.dt);
  return VectorXd::Constant(m, value);
}

UniformPolicy::UniformPolicy(PolicyConfig cfg) : cfg_(cfg) {}

VectorXd UniformPolicy::act(const PolicyContext& ctx) {
  require(ctx.state_history != nullptr && !ctx.state_history->empty(),
          "UniformPolicy: empty history");
  const Model& model = *ctx.model;
  const int m = model.input_dim();
  const MatrixXd b_in = model.input_jacobian(*ctx.x, *ctx.theta, ctx.dt);
  if (b_in.norm() == 0.0) return VectorXd::Zero(m);

  const VectorXd u0 = VectorXd::Zero(m);
  const VectorXd x_base =
      *ctx.x + ctx.dt * model.predict(StateAction(*ctx.x, u0), *ctx.theta);

  // x(u) = x_base + B u for the control-affine models shipped here, so the
  // ascent direction is B^T sum_s (x(u) - x_s). The configured step is a step
  // length: the raw gradient scale varies with ||B||^2 and the history size.
  const double step = cfg_.gradient_step_factor * cfg_.gamma;
  VectorXd u = VectorXd::Zero(m);
  VectorXd best_u = u;
  double best_obj = -1.0;
  for (int it = 0; it < cfg_.gradient_steps; ++it) {
    const VectorXd x_pred = x_base + b_in * u;
    VectorXd grad = VectorXd::Zero(m);
    double obj = 0.0;
    for (const VectorXd& xs : *ctx.state_history) {
      const VectorXd diff = x_pred - xs;
      grad.noalias() += b_in.transpose() * diff;
      obj += 0.5 * diff.squaredNorm();
    }
    if (obj > best_obj) {
      best_obj = obj;
      best_u = u;
    }
    const double gnorm = grad.norm();
    if (gnorm < 1e-15) break;
    u = project_to_ball(u + (step / gnorm) * grad, cfg_.gamma);
  }
  const VectorXd x_pred = x_base + b_in * u;
  double obj = 0.0;
  for (const VectorXd& xs : *ctx.state_history) {
    obj += 0.5 * (x_pred - xs).squaredNorm();
  }
  if (obj > best_obj) best_u = u;
  return best_u;
}

// ---------------------------------------------------------------------------
// episodic planner
// ---------------------------------------------------------------------------

std::vector<VectorXd> episodic_plan(const Model& model, const VectorXd& theta,
                                    const MatrixXd& gram_matrix,
                                    const VectorXd& x, int horizon, double dt,
                                    const PolicyConfig& cfg) {
  require(horizon >= 1, "episodic_plan: horizon must be >= 1");
  const int d = model.state_dim();
  const int m = model.input_dim();
  const int n = model.param_dim();

  std::vector<VectorXd> plan(static_cast<std::size_t>(horizon),
                             VectorXd::Zero(m));
  std::vector<VectorXd> best_plan = plan;
  double best_obj = -std::numeric_limits<double>::infinity();

  std::vector<VectorXd> states(static_cast<std::size_t>(horizon) + 1);
  std::vector<MatrixXd> feats(static_cast<std::size_t>(horizon) + 1);
  std::vector<MatrixXd> f_x(static_cast<std::size_t>(horizon));
  std::vector<MatrixXd> f_u(static_cast<std::size_t>(horizon));

  const double step_size = cfg.plan_step_factor * cfg.gamma;
  const VectorXd u_zero = VectorXd::Zero(m);

  for (int it = 0; it <= cfg.plan_iterations; ++it) {
    // Forward rollout, caching the linearization along the trajectory.
    states[0] = x;
    MatrixXd m_total = gram_matrix;
    for (int s = 0; s < horizon; ++s) {
      const StateAction z(states[static_cast<std::size_t>(s)],
                          plan[static_cast<std::size_t>(s)]);
      states[static_cast<std::size_t>(s) + 1] =
          states[static_cast<std::size_t>(s)] + dt * model.predict(z, theta);
      f_x[static_cast<std::size_t>(s)] = model.state_jacobian(z, theta);
      f_u[static_cast<std::size_t>(s)] =
          model.input_jacobian(states[static_cast<std::size_t>(s)], theta, dt);
    }
    for (int s = 1; s <= horizon; ++s) {
      const StateAction z(states[static_cast<std::size_t>(s)], u_zero);
      feats[static_cast<std::size_t>(s)] = model.features(z, theta);
      m_total.noalias() +=
          feats[static_cast<std::size_t>(s)].transpose() *
          feats[static_cast<std::size_t>(s)];
    }

    Eigen::LDLT<MatrixXd> ldlt(m_total);
    const double objective = ldlt.vectorD().array().log().sum();
    if (objective > best_obj) {
      best_obj = objective;
      best_plan = plan;
    }
    if (it == cfg.plan_iterations) break;

    const MatrixXd m_inv = ldlt.solve(MatrixXd::Identity(n, n));

    // Backward pass: dL/dV_s = 2 V_s M^{-1}; chain through the features'
    // state dependence and the rollout dynamics.
    VectorXd lambda = VectorXd::Zero(d);
    std::vector<VectorXd> grad_u(static_cast<std::size_t>(horizon));
    for (int s = horizon; s >= 1; --s) {
      const StateAction z(states[static_cast<std::size_t>(s)], u_zero);
      const MatrixXd gmat = 2.0 * feats[static_cast<std::size_t>(s)] * m_inv;
      VectorXd gx = VectorXd::Zero(d);
      for (int k = 0; k < d; ++k) {
        const MatrixXd mix = model.feature_state_jacobian(z, theta, k);
        gx.noalias() += mix.transpose() * gmat.row(k).transpose();
      }
      lambda += gx;
      grad_u[static_cast<std::size_t>(s) - 1] =
          f_u[static_cast<std::size_t>(s) - 1].transpose() * lambda;
      if (s > 1) {
        lambda = lambda + dt * f_x[static_cast<std::size_t>(s) - 1].transpose() *
                              lambda;
      }
    }

    for (int s = 0; s < horizon; ++s) {
      plan[static_cast<std::size_t>(s)] = project_to_ball(
          plan[static_cast<std::size_t>(s)] +
              step_size * grad_u[static_cast<std::size_t>(s)],
          cfg.gamma);
    }
  }
  return best_plan;
}

EpisodicPolicy::EpisodicPolicy(PolicyConfig cfg) : cfg_(cfg) {
  cursor_ = static_cast<std::size_t>(cfg_.horizon);  // replan on first call
}

VectorXd EpisodicPolicy::act(const PolicyContext& ctx) {
  if (cursor_ >= plan_.size()) {
    plan_ = episodic_plan(*ctx.model, *ctx.theta, ctx.gram->matrix(), *ctx.x,
                          cfg_.horizon, ctx.dt, cfg_);
    cursor_ = 0;
  }
  return plan_[cursor_++];
}

}  // namespace flex
