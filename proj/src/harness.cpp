#include "flex/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace flex {

namespace {

long elapsed_ns(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

GridSpec grid_from_config(const Config& cfg, int joints) {
  GridSpec spec;
  const std::string kind = cfg.get_string("grid", "kind", "regular");
  spec.kind = kind == "halton" ? GridSpec::Kind::Halton
                               : GridSpec::Kind::Regular;
  if (cfg.has("grid", "pos_lo")) {
    // Chain-style grid: per-joint position and velocity extents replicated
    // to the full (q_1..q_N, qdot_1..qdot_N) layout.
    const double pos_lo = cfg.get_double("grid", "pos_lo", -M_PI);
    const double pos_hi = cfg.get_double("grid", "pos_hi", M_PI);
    const double vel_lo = cfg.get_double("grid", "vel_lo", -2.0);
    const double vel_hi = cfg.get_double("grid", "vel_hi", 2.0);
    spec.lo = VectorXd(2 * joints);
    spec.hi = VectorXd(2 * joints);
    spec.lo.head(joints).setConstant(pos_lo);
    spec.lo.tail(joints).setConstant(vel_lo);
    spec.hi.head(joints).setConstant(pos_hi);
    spec.hi.tail(joints).setConstant(vel_hi);
  } else {
    spec.lo = cfg.get_vector("grid", "lo", VectorXd());
    spec.hi = cfg.get_vector("grid", "hi", VectorXd());
  }
  spec.counts = cfg.get_int_list("grid", "counts");
  spec.count = static_cast<int>(cfg.get_long("grid", "count", 500));
  return spec;
}

PolicyConfig policy_config(const Config& cfg, const Environment& env,
                           std::uint64_t seed) {
  PolicyConfig pc;
  pc.gamma = cfg.get_double("policy", "gamma", env.gamma());
  const std::string rows =
      cfg.get_string("policy", "row_selection", "round_robin");
  if (rows == "random") {
    pc.row_selection = PolicyConfig::RowSelection::Random;
  } else if (rows == "fixed") {
    pc.row_selection = PolicyConfig::RowSelection::Fixed;
    pc.fixed_row = static_cast<int>(cfg.get_long("policy", "row", 0));
  } else {
    pc.row_selection = PolicyConfig::RowSelection::RoundRobin;
  }
  pc.seed = derive_seed(seed, 7);
  pc.omega0 = cfg.get_double("policy", "omega0", 1.0);
  pc.gradient_steps =
      static_cast<int>(cfg.get_long("policy", "gradient_steps", 100));
  pc.gradient_step_factor =
      cfg.get_double("policy", "gradient_step_factor", 0.1);
  pc.horizon = static_cast<int>(cfg.get_long("policy", "horizon", 50));
  pc.plan_iterations =
      static_cast<int>(cfg.get_long("policy", "plan_iterations", 200));
  pc.plan_step_factor = cfg.get_double("policy", "plan_step_factor", 0.05);
  return pc;
}

double default_learning_rate(const std::string& env_name) {
  if (env_name == "quadrotor") return 0.02;
  if (env_name == "cartpole") return 0.1;
  if (env_name == "arm") return 0.05;
  if (env_name == "star_field") return 0.01;
  return 0.01;
}

std::string env_default_eval(const std::string& env_name) {
  return env_name == "star_field" ? "params" : "grid";
}

}  // namespace

std::shared_ptr<Environment> build_environment(const Config& cfg) {
  const std::string name = cfg.require_string("run", "env");
  const double dt = cfg.get_double("env", "dt", 0.1);
  const double sigma = cfg.get_double("env", "sigma", 0.01);
  const double gamma = cfg.get_double("env", "gamma", 1.0);

  if (name == "pendulum") {
    PendulumEnv::Params p;
    p.omega0_sq = cfg.get_double("env", "omega0_sq", 1.0);
    p.alpha = cfg.get_double("env", "alpha", 0.1);
    p.b = cfg.get_double("env", "b", 1.0);
    const VectorXd x0 = cfg.get_vector("env", "x0", VectorXd::Zero(2));
    return std::make_shared<PendulumEnv>(p, dt, sigma, gamma, x0,
                                         grid_from_config(cfg, 0));
  }
  if (name == "quadrotor") {
    QuadrotorEnv::Params p;
    p.mass = cfg.get_double("env", "mass", 0.5);
    p.inertia = cfg.get_double("env", "inertia", 0.01);
    p.arm = cfg.get_double("env", "arm", 0.25);
    p.friction = cfg.get_double("env", "friction", 0.1);
    p.gravity = cfg.get_double("env", "gravity", 9.81);
    const VectorXd x0 = cfg.get_vector("env", "x0", VectorXd::Zero(6));
    return std::make_shared<QuadrotorEnv>(p, dt, sigma, gamma, x0,
                                          grid_from_config(cfg, 0));
  }
  if (name == "cartpole") {
    CartpoleEnv::Params p;
    p.cart_mass = cfg.get_double("env", "cart_mass", 1.0);
    p.pole_mass = cfg.get_double("env", "pole_mass", 0.1);
    p.half_length = cfg.get_double("env", "half_length", 0.5);
    p.gravity = cfg.get_double("env", "gravity", 9.8);
    const VectorXd x0 = cfg.get_vector("env", "x0", VectorXd::Zero(4));
    return std::make_shared<CartpoleEnv>(p, dt, sigma, gamma, x0,
                                         grid_from_config(cfg, 0));
  }
  if (name == "arm") {
    ArmEnv::Params p;
    p.m1 = cfg.get_double("env", "m1", 1.0);
    p.m2 = cfg.get_double("env", "m2", 1.0);
    p.l1 = cfg.get_double("env", "l1", 1.0);
    p.l2 = cfg.get_double("env", "l2", 1.0);
    p.gravity = cfg.get_double("env", "gravity", 9.81);
    const VectorXd x0 = cfg.get_vector("env", "x0", VectorXd::Zero(4));
    return std::make_shared<ArmEnv>(p, dt, sigma, gamma, x0,
                                    grid_from_config(cfg, 0));
  }
  if (name == "star_field") {
    StarFieldEnv::Params p;
    p.rho = cfg.get_double("env", "rho", 0.5);
    p.period = cfg.get_double("env", "period", 100.0);
    p.center = cfg.get_string("env", "force_center", "origin") == "star"
                   ? StarFieldModel::ForceCenter::Star
                   : StarFieldModel::ForceCenter::Origin;
    const VectorXd x0 = cfg.get_vector("env", "x0", VectorXd::Zero(4));
    return std::make_shared<StarFieldEnv>(p, dt, sigma, gamma, x0,
                                          grid_from_config(cfg, 0));
  }
  if (name == "chain") {
    const int joints = static_cast<int>(cfg.get_long("env", "joints", 2));
    ChainEnv::Params p;
    p.omega0_sq = cfg.get_double("env", "omega0_sq", 1.0);
    p.coupling = cfg.get_double("env", "coupling", 1.0);
    p.input_gain = cfg.get_double("env", "b", 1.0);
    VectorXd friction(joints);
    for (int i = 0; i < joints; ++i) {
      friction[i] =
          0.2 + 0.5 * static_cast<double>(i) /
                    static_cast<double>(std::max(1, joints - 1));
    }
    p.friction = cfg.get_vector("env", "friction", friction);
    require(p.friction.size() == joints, "chain: friction list size mismatch");
    const VectorXd x0 = cfg.get_vector("env", "x0", VectorXd::Zero(2 * joints));
    return std::make_shared<ChainEnv>(joints, p, dt, sigma, gamma, x0,
                                      grid_from_config(cfg, joints));
  }
  throw std::invalid_argument("unknown environment: " + name);
}

std::shared_ptr<Model> build_model(const Config& cfg, const Environment& env) {
  std::string name = cfg.get_string("run", "model", "");
  if (name.empty()) {
    // Per-environment defaults.
    const std::string e = env.name();
    if (e == "pendulum") name = "pendulum_linear";
    else if (e == "quadrotor") name = "quadrotor_residual";
    else if (e == "cartpole") name = "cartpole_mlp";
    else if (e == "arm") name = "arm_mlp";
    else if (e == "star_field") name = "star_field";
    else if (e == "chain") name = "chain_linear";
    else name = "mlp";
  }
  const int hidden = static_cast<int>(cfg.get_long("model", "hidden", 8));

  if (name == "pendulum_linear") return std::make_shared<PendulumLinearModel>();
  if (name == "mlp") {
    return std::make_shared<MlpModel>(env.state_dim(), env.input_dim(), hidden);
  }
  if (name == "cartpole_mlp") return std::make_shared<CartpoleMlpModel>(hidden);
  if (name == "arm_mlp") return std::make_shared<ArmMlpModel>(hidden);
  if (name == "quadrotor_residual") {
    const auto* quad = dynamic_cast<const QuadrotorEnv*>(&env);
    require(quad != nullptr, "quadrotor_residual needs the quadrotor env");
    return std::make_shared<QuadrotorResidualModel>(quad->body(), hidden);
  }
  if (name == "star_field") {
    const auto* star = dynamic_cast<const StarFieldEnv*>(&env);
    require(star != nullptr, "star_field model needs the star_field env");
    return std::make_shared<StarFieldModel>(star->params().center);
  }
  if (name == "chain_linear") {
    const auto* chain = dynamic_cast<const ChainEnv*>(&env);
    require(chain != nullptr, "chain_linear needs the chain env");
    return std::make_shared<ChainLinearModel>(
        chain->joints(), chain->params().omega0_sq, chain->params().coupling,
        chain->params().input_gain);
  }
  throw std::invalid_argument("unknown model: " + name);
}

RunSetup build_run(const Config& cfg) {
  return build_run(cfg, cfg.get_seed("run", "seed", 0));
}

RunSetup build_run(const Config& cfg, std::uint64_t seed) {
  RunSetup setup;
  setup.seed = seed;
  setup.config_hash = cfg.identity_hash();
  setup.env = build_environment(cfg);
  setup.model = build_model(cfg, *setup.env);
  setup.horizon = cfg.get_long("run", "T", 100);
  require(setup.horizon >= 1, "run: T must be >= 1");
  setup.eval_stride = cfg.get_long("run", "eval_stride", 10);
  require(setup.eval_stride >= 1, "run: eval_stride must be >= 1");
  setup.checkpoint_stride = cfg.get_long("output", "checkpoint_stride", 0);

  const double eps_reg = cfg.get_double("run", "eps_reg", 1e-3);
  setup.gram = std::make_shared<GramState>(setup.model->param_dim(), eps_reg);

  // Initial parameters: explicit list, else zeros for linear models and a
  // seeded uniform init for networks.
  VectorXd theta0;
  if (cfg.has("model", "theta0")) {
    theta0 = cfg.get_vector("model", "theta0", VectorXd());
    require(theta0.size() == setup.model->param_dim(),
            "model.theta0 size mismatch");
  } else if (setup.model->exactly_linear()) {
    theta0 = VectorXd::Zero(setup.model->param_dim());
  } else if (setup.model->name() == "star_field") {
    theta0 = Eigen::Vector3d(0.0, 0.0, 1.0);
  } else {
    const std::uint64_t init_seed =
        cfg.has("model", "init_seed")
            ? cfg.get_seed("model", "init_seed", 0)
            : derive_seed(seed, 99);
    if (const auto* m = dynamic_cast<const MlpModel*>(setup.model.get())) {
      theta0 = m->init_params(init_seed);
    } else if (const auto* m =
                   dynamic_cast<const CartpoleMlpModel*>(setup.model.get())) {
      theta0 = m->init_params(init_seed);
    } else if (const auto* m =
                   dynamic_cast<const ArmMlpModel*>(setup.model.get())) {
      theta0 = m->init_params(init_seed);
    } else if (const auto* m = dynamic_cast<const QuadrotorResidualModel*>(
                   setup.model.get())) {
      theta0 = m->init_params(init_seed);
    } else {
      theta0 = VectorXd::Zero(setup.model->param_dim());
    }
  }

  std::string learner_name = cfg.get_string("run", "learner", "");
  if (learner_name.empty()) {
    learner_name = setup.model->exactly_linear() ? "rls" : "ogd";
  }
  if (learner_name == "rls") {
    setup.learner = std::make_shared<RlsLearner>(setup.gram, theta0);
    setup.learner_owns_gram = true;
  } else if (learner_name == "ogd") {
    OgdLearner::Options opts;
    opts.learning_rate = cfg.get_double("learner", "eta",
                                        default_learning_rate(setup.env->name()));
    opts.buffer_capacity =
        static_cast<int>(cfg.get_long("learner", "buffer", 100));
    opts.gradient_clip = cfg.get_double("learner", "gradient_clip", 1e3);
    setup.learner = std::make_shared<OgdLearner>(theta0, opts);
    setup.learner_owns_gram = false;
  } else {
    throw std::invalid_argument("unknown learner: " + learner_name);
  }

  const std::string policy_name = cfg.get_string("run", "policy", "flex");
  const PolicyConfig pc = policy_config(cfg, *setup.env, seed);
  if (policy_name == "flex") {
    setup.policy = std::make_shared<FlexPolicy>(pc);
  } else if (policy_name == "random") {
    setup.policy = std::make_shared<RandomPolicy>(pc);
  } else if (policy_name == "periodic") {
    setup.policy = std::make_shared<PeriodicPolicy>(pc);
  } else if (policy_name == "uniform") {
    setup.policy = std::make_shared<UniformPolicy>(pc);
  } else if (policy_name == "episodic") {
    setup.policy = std::make_shared<EpisodicPolicy>(pc);
  } else {
    throw std::invalid_argument("unknown policy: " + policy_name);
  }

  const std::string eval_kind =
      cfg.get_string("run", "eval", env_default_eval(setup.env->name()));
  setup.eval_kind =
      eval_kind == "params" ? EvalKind::ParamSpace : EvalKind::Grid;
  if (setup.eval_kind == EvalKind::Grid) setup.grid = setup.env->eval_grid();
  return setup;
}

double evaluate(const Model& model, const VectorXd& theta,
                const Environment& env, const std::vector<StateAction>& grid,
                double t) {
  require(!grid.empty(), "evaluate: empty grid");
  double total = 0.0;
  for (const StateAction& z : grid) {
    total += (model.predict(z, theta) - env.drift(z.x, z.u, t)).squaredNorm();
  }
  return std::sqrt(total / static_cast<double>(grid.size()));
}

double evaluate_params(const VectorXd& theta, const VectorXd& theta_star) {
  require(theta.size() == theta_star.size(),
          "evaluate_params: dimension mismatch");
  return (theta - theta_star).norm();
}

RunTrace run_exploration(RunSetup& setup) {
  RunTrace trace;
  trace.config_hash = setup.config_hash;
  trace.steps.reserve(static_cast<std::size_t>(setup.horizon));

  Rng noise = Rng(setup.seed).fork(1);
  const double dt = setup.env->dt();
  VectorXd x = setup.env->initial_state();
  std::vector<VectorXd> history{x};

  const auto* star = dynamic_cast<const StarFieldEnv*>(setup.env.get());

  try {
    for (long t = 0; t < setup.horizon; ++t) {
      const double time = static_cast<double>(t) * dt;
      PolicyContext ctx;
      ctx.model = setup.model.get();
      const VectorXd theta = setup.learner->theta();
      ctx.theta = &theta;
      ctx.gram = setup.gram.get();
      ctx.x = &x;
      ctx.state_history = &history;
      ctx.step_index = t;
      ctx.time = time;
      ctx.dt = dt;

      const auto policy_start = std::chrono::steady_clock::now();
      const VectorXd u = setup.policy->act(ctx);
      const long policy_ns = elapsed_ns(policy_start);

      const VectorXd x_next = setup.env->step(x, u, time, noise);
      const Target target = make_target(x, u, x_next, dt);

      const auto learn_start = std::chrono::steady_clock::now();
      if (!setup.learner_owns_gram) {
        setup.gram->block_update(setup.model->features(target.z, theta));
      }
      setup.learner->update(*setup.model, target);
      const long learn_ns = elapsed_ns(learn_start);

      StepRecord rec;
      rec.t = t;
      rec.x = x;
      rec.u = u;
      rec.policy_ns = policy_ns;
      rec.learn_ns = learn_ns;
      if ((t + 1) % setup.eval_stride == 0 || t + 1 == setup.horizon) {
        const double eval_time = static_cast<double>(t + 1) * dt;
        if (setup.eval_kind == EvalKind::ParamSpace) {
          require(star != nullptr, "param-space eval needs the star env");
          rec.eps =
              evaluate_params(setup.learner->theta(), star->theta_star(eval_time));
        } else {
          rec.eps = evaluate(*setup.model, setup.learner->theta(), *setup.env,
                             setup.grid, eval_time);
        }
        rec.has_eps = true;
      }
      trace.steps.push_back(std::move(rec));
      if (setup.checkpoint_stride > 0 &&
          (t + 1) % setup.checkpoint_stride == 0) {
        trace.theta_checkpoints.emplace_back(t + 1, setup.learner->theta());
      }

      x = x_next;
      history.push_back(x);
    }
  } catch (const SimulationDiverged& err) {
    trace.failed = true;
    trace.fail_reason = err.what();
  } catch (const SolverFailure& err) {
    trace.failed = true;
    trace.fail_reason = err.what();
  }

  trace.theta_final = setup.learner->theta();
  trace.clip_count = setup.env->clip_count();
  return trace;
}

double percentile(std::vector<double> values, double fraction) {
  require(!values.empty(), "percentile: empty sample");
  require(fraction >= 0.0 && fraction <= 1.0, "percentile: bad fraction");
  std::sort(values.begin(), values.end());
  const double pos = fraction * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[hi];
}

std::vector<AggregateRow> aggregate_traces(const std::string& env,
                                           const std::string& policy,
                                           const std::vector<RunTrace>& traces) {
  std::vector<AggregateRow> rows;
  if (traces.empty()) return rows;
  const std::uint64_t hash = traces.front().config_hash;
  for (const RunTrace& tr : traces) {
    if (tr.config_hash != hash) {
      throw std::invalid_argument("aggregate_traces: mixed config hashes");
    }
  }
  // Collect eps per eval step across non-failed traces.
  std::map<long, std::vector<double>> by_step;
  for (const RunTrace& tr : traces) {
    if (tr.failed) continue;
    for (const StepRecord& s : tr.steps) {
      if (s.has_eps) by_step[s.t].push_back(s.eps);
    }
  }
  for (const auto& [t, values] : by_step) {
    AggregateRow row;
    row.env = env;
    row.policy = policy;
    row.t = t;
    row.seeds = static_cast<int>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    row.median = percentile(values, 0.5);
    row.q25 = percentile(values, 0.25);
    row.q75 = percentile(values, 0.75);
    row.config_hash = hash;
    rows.push_back(std::move(row));
  }
  return rows;
}

BenchmarkResult benchmark(const Config& base,
                          const std::vector<std::string>& policies,
                          int n_seeds) {
  require(n_seeds >= 1, "benchmark: need at least one seed");
  BenchmarkResult result;
  const std::uint64_t seed0 = base.get_seed("run", "seed", 0);
  for (const std::string& policy : policies) {
    Config cfg = base;
    cfg.set("run", "policy", policy);
    PolicyRuns runs;
    runs.policy = policy;
    for (int i = 0; i < n_seeds; ++i) {
      RunSetup setup = build_run(cfg, seed0 + static_cast<std::uint64_t>(i));
      RunTrace trace = run_exploration(setup);
      if (trace.failed) {
        ++runs.failed;
        ++result.failed_runs;
      }
      runs.traces.push_back(std::move(trace));
    }
    auto rows = aggregate_traces(base.require_string("run", "env"), policy,
                                 runs.traces);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    result.runs.push_back(std::move(runs));
  }
  return result;
}

void write_aggregate_csv(std::ostream& os,
                         const std::vector<AggregateRow>& rows) {
  os << "env,policy,t,seeds,mean,median,q25,q75,config_hash\n";
  char hash[24];
  for (const AggregateRow& r : rows) {
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(r.config_hash));
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%s,%ld,%d,%.17g,%.17g,%.17g,%.17g,%s\n",
                  r.env.c_str(), r.policy.c_str(), r.t, r.seeds, r.mean,
                  r.median, r.q25, r.q75, hash);
    os << line;
  }
}

std::vector<ChainRow> chain_experiment(const std::vector<int>& sizes,
                                       const Config& base, int n_seeds,
                                       double threshold, long cap) {
  require(!sizes.empty(), "chain_experiment: no sizes");
  require(n_seeds >= 1, "chain_experiment: need at least one seed");
  std::vector<ChainRow> rows;
  const std::uint64_t seed0 = base.get_seed("run", "seed", 0);

  for (int joints : sizes) {
    for (const std::string policy : {std::string("flex"), std::string("random")}) {
      Config cfg = base;
      cfg.set("run", "env", "chain");
      cfg.set("env", "joints", std::to_string(joints));
      cfg.set("run", "policy", policy);
      cfg.set("run", "T", std::to_string(cap));
      cfg.set("run", "eval_stride", std::to_string(cap));  // eps unused here

      std::vector<double> complexities;
      double policy_ns_sum = 0.0;
      long policy_steps = 0;
      for (int i = 0; i < n_seeds; ++i) {
        RunSetup setup = build_run(cfg, seed0 + static_cast<std::uint64_t>(i));
        const auto* chain = dynamic_cast<const ChainEnv*>(setup.env.get());
        require(chain != nullptr, "chain_experiment: env mismatch");
        const VectorXd& theta_star = chain->params().friction;

        // Track the first step count reaching the threshold; run manually so
        // the parameter error is visible after every update.
        Rng noise = Rng(setup.seed).fork(1);
        const double dt = setup.env->dt();
        VectorXd x = setup.env->initial_state();
        std::vector<VectorXd> history{x};
        double reached = -1.0;
        if (evaluate_params(setup.learner->theta(), theta_star) <= threshold) {
          reached = 0.0;
        }
        for (long t = 0; t < cap && reached < 0.0; ++t) {
          PolicyContext ctx;
          ctx.model = setup.model.get();
          const VectorXd theta = setup.learner->theta();
          ctx.theta = &theta;
          ctx.gram = setup.gram.get();
          ctx.x = &x;
          ctx.state_history = &history;
          ctx.step_index = t;
          ctx.time = static_cast<double>(t) * dt;
          ctx.dt = dt;
          const auto start = std::chrono::steady_clock::now();
          const VectorXd u = setup.policy->act(ctx);
          policy_ns_sum += static_cast<double>(elapsed_ns(start));
          ++policy_steps;
          const VectorXd x_next = setup.env->step(x, u, ctx.time, noise);
          setup.learner->update(*setup.model,
                                make_target(x, u, x_next, dt));
          x = x_next;
          history.push_back(x);
          if (evaluate_params(setup.learner->theta(), theta_star) <= threshold) {
            reached = static_cast<double>(t + 1);
          }
        }
        complexities.push_back(reached < 0.0
                                   ? std::numeric_limits<double>::infinity()
                                   : reached);
      }

      ChainRow row;
      row.joints = joints;
      row.policy = policy;
      row.cap = cap;
      row.config_hash = cfg.identity_hash();
      const double median = percentile(complexities, 0.5);
      row.capped = !std::isfinite(median);
      row.median_samples = row.capped ? static_cast<double>(cap) : median;
      row.mean_policy_ns =
          policy_steps > 0 ? policy_ns_sum / static_cast<double>(policy_steps)
                           : 0.0;
      row.seeds = n_seeds;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_chain_csv(std::ostream& os, const std::vector<ChainRow>& rows) {
  os << "joints,policy,median_sample_complexity,mean_policy_ns,seeds,"
        "config_hash\n";
  for (const ChainRow& r : rows) {
    os << r.joints << "," << r.policy << ",";
    if (r.capped) {
      os << ">" << r.cap;
    } else {
      os << r.median_samples;
    }
    char line[96];
    std::snprintf(line, sizeof(line), ",%.17g,%d,%016llx\n", r.mean_policy_ns,
                  r.seeds, static_cast<unsigned long long>(r.config_hash));
    os << line;
  }
}

std::vector<StarPolicyResult> star_experiment(const Config& base, int n_seeds) {
  require(n_seeds >= 1, "star_experiment: need at least one seed");
  Config cfg = base;
  cfg.set("run", "env", "star_field");
  cfg.set("run", "eval", "params");

  std::vector<StarPolicyResult> results;
  const std::uint64_t seed0 = base.get_seed("run", "seed", 0);
  for (const std::string policy :
       {std::string("flex"), std::string("random"), std::string("episodic")}) {
    Config pc = cfg;
    pc.set("run", "policy", policy);
    StarPolicyResult res;
    res.policy = policy;
    res.config_hash = pc.identity_hash();

    std::vector<double> final_errors;
    double dist_sum = 0.0;
    long dist_count = 0;
    double policy_ns_sum = 0.0;
    long policy_ns_count = 0;
    for (int i = 0; i < n_seeds; ++i) {
      RunSetup setup = build_run(pc, seed0 + static_cast<std::uint64_t>(i));
      const auto* star = dynamic_cast<const StarFieldEnv*>(setup.env.get());
      require(star != nullptr, "star_experiment: env mismatch");
      RunTrace trace = run_exploration(setup);
      if (trace.failed) {
        ++res.failed;
        res.traces.push_back(std::move(trace));
        continue;
      }
      for (const StepRecord& s : trace.steps) {
        const Eigen::Vector2d kappa =
            star->star_position(static_cast<double>(s.t) * setup.env->dt());
        dist_sum += (Eigen::Vector2d(s.x[0], s.x[2]) - kappa).norm();
        ++dist_count;
        policy_ns_sum += static_cast<double>(s.policy_ns);
        ++policy_ns_count;
      }
      for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
        if (it->has_eps) {
          final_errors.push_back(it->eps);
          break;
        }
      }
      res.traces.push_back(std::move(trace));
    }
    res.error_rows = aggregate_traces("star_field", policy, res.traces);
    res.final_error_median =
        final_errors.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : percentile(final_errors, 0.5);
    res.mean_distance_to_star =
        dist_count > 0 ? dist_sum / static_cast<double>(dist_count) : 0.0;
    res.mean_policy_ns =
        policy_ns_count > 0
            ? policy_ns_sum / static_cast<double>(policy_ns_count)
            : 0.0;
    results.push_back(std::move(res));
  }
  return results;
}

void write_star_summary_csv(std::ostream& os,
                            const std::vector<StarPolicyResult>& results) {
  os << "policy,final_param_error_median,mean_distance_to_star,mean_policy_ns,"
        "failed,config_hash\n";
  for (const StarPolicyResult& r : results) {
    char line[224];
    std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%d,%016llx\n",
                  r.policy.c_str(), r.final_error_median,
                  r.mean_distance_to_star, r.mean_policy_ns, r.failed,
                  static_cast<unsigned long long>(r.config_hash));
    os << line;
  }
}

}  // namespace flex
