#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "flex/environment.hpp"
#include "flex/learner.hpp"
#include "flex/models.hpp"
#include "flex/rng.hpp"

using flex::make_target;
using flex::MatrixXd;
using flex::StateAction;
using flex::Target;
using flex::VectorXd;

namespace {

// Regression-style model: the state doubles as the regressor, the first
// output is x^T theta and the remaining rows are identically zero.
std::shared_ptr<flex::CustomLinearModel> dot_model(int n) {
  return std::make_shared<flex::CustomLinearModel>(
      n, 1, n,
      [n](const StateAction& z) {
        MatrixXd v = MatrixXd::Zero(n, n);
        v.row(0) = z.x.transpose();
        return v;
      },
      [n](const StateAction& z) { return VectorXd(VectorXd::Zero(n)); });
}

Target scalar_target(const VectorXd& v, double y) {
  VectorXd target = VectorXd::Zero(v.size());
  target[0] = y;
  return Target{StateAction(v, VectorXd::Zero(1)), target};
}

}  // namespace

TEST_CASE("make_target arithmetic") {
  const VectorXd x = Eigen::Vector2d(0.0, 0.0);
  const VectorXd u = VectorXd::Constant(1, 0.3);

  const Target same = make_target(x, u, x, 0.1);
  CHECK(same.y.isZero(1e-15));

  const Target t = make_target(x, u, Eigen::Vector2d(0.1, 0.2), 0.1);
  CHECK(t.y.isApprox(Eigen::Vector2d(1.0, 2.0), 1e-12));

  CHECK_THROWS_AS(make_target(x, u, x, 0.0), std::invalid_argument);
}

TEST_CASE("noiseless Euler step recovers the drift as target") {
  flex::PendulumEnv env({}, 0.1, 0.0, 1.0, Eigen::Vector2d(0.4, -0.2), {});
  flex::Rng rng(3);
  const VectorXd x = env.initial_state();
  const VectorXd u = VectorXd::Constant(1, 0.7);
  const VectorXd x_next = env.step(x, u, 0.0, rng);
  const Target t = make_target(x, u, x_next, env.dt());
  CHECK(t.y.isApprox(env.drift(x, u, 0.0), 1e-12));
}

TEST_CASE("rls matches the hand-computed normal equations, n = 1") {
  auto model = dot_model(1);
  auto gram = std::make_shared<flex::GramState>(1, 1e-12);
  flex::RlsLearner learner(gram, VectorXd::Zero(1));
  learner.update(*model, scalar_target(VectorXd::Constant(1, 1.0), 1.0));
  learner.update(*model, scalar_target(VectorXd::Constant(1, 2.0), 4.0));
  // (1*1 + 2*4) / (1 + 4) = 1.8 as eps -> 0
  CHECK(learner.theta()[0] == doctest::Approx(1.8).epsilon(1e-9));
}

TEST_CASE("rls interpolates exact data after n independent rows") {
  auto model = dot_model(3);
  auto gram = std::make_shared<flex::GramState>(3, 1e-9);
  flex::RlsLearner learner(gram, VectorXd::Zero(3));
  const VectorXd theta_star = Eigen::Vector3d(0.7, -1.2, 0.4);
  flex::Rng rng(11);
  for (int i = 0; i < 3; ++i) {
    VectorXd v(3);
    for (int j = 0; j < 3; ++j) v[j] = 2.0 * rng.uniform() - 1.0;
    v[i] += 2.0;  // keep rows well conditioned
    learner.update(*model, scalar_target(v, v.dot(theta_star)));
  }
  CHECK((learner.theta() - theta_star).norm() < 1e-8);
}

TEST_CASE("rls rejects models that are not exactly linear") {
  flex::MlpModel model(1, 1, 4);
  auto gram = std::make_shared<flex::GramState>(model.param_dim(), 1e-3);
  flex::RlsLearner learner(gram, VectorXd::Zero(model.param_dim()));
  const Target t{StateAction(VectorXd::Zero(1), VectorXd::Zero(1)),
                 VectorXd::Zero(1)};
  CHECK_THROWS_AS(learner.update(model, t), std::invalid_argument);
}

TEST_CASE("rls equals batch regularized least squares on a pendulum run") {
  const double eps = 1e-3;
  flex::PendulumEnv env({}, 0.1, 0.0, 1.0, VectorXd::Zero(2), {});
  auto model = std::make_shared<flex::PendulumLinearModel>();
  auto gram = std::make_shared<flex::GramState>(3, eps);
  flex::RlsLearner learner(gram, VectorXd::Zero(3));

  MatrixXd normal = eps * MatrixXd::Identity(3, 3);
  VectorXd rhs = VectorXd::Zero(3);

  flex::Rng rng(2024);
  VectorXd x = env.initial_state();
  for (int t = 0; t < 50; ++t) {
    const VectorXd u = VectorXd::Constant(1, 2.0 * rng.uniform() - 1.0);
    const VectorXd x_next = env.step(x, u, 0.0, rng);
    const Target target = make_target(x, u, x_next, env.dt());

    const MatrixXd v = model->feature_matrix(target.z);
    const VectorXd c = model->offset(target.z);
    normal += v.transpose() * v;
    rhs += v.transpose() * (target.y - c);

    learner.update(*model, target);
    const VectorXd batch = normal.ldlt().solve(rhs);
    CHECK((learner.theta() - batch).cwiseAbs().maxCoeff() < 1e-8);
    x = x_next;
  }
  // noiseless data: the batch estimate converges to the true parameters
  CHECK((learner.theta() - Eigen::Vector3d(1.0, 0.1, 1.0)).norm() < 1e-2);
}

TEST_CASE("rls error shrinks with more noisy data (median over 50 seeds)") {
  const VectorXd theta_star = Eigen::Vector2d(1.0, -0.5);
  std::vector<double> err10, err100;
  for (int seed = 0; seed < 50; ++seed) {
    auto model = dot_model(2);
    auto gram = std::make_shared<flex::GramState>(2, 1e-3);
    flex::RlsLearner learner(gram, VectorXd::Zero(2));
    flex::Rng rng(seed + 1);
    for (int t = 1; t <= 100; ++t) {
      VectorXd v(2);
      v << 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0;
      const double y = v.dot(theta_star) + 0.1 * rng.gaussian();
      learner.update(*model, scalar_target(v, y));
      if (t == 10) err10.push_back((learner.theta() - theta_star).norm());
      if (t == 100) err100.push_back((learner.theta() - theta_star).norm());
    }
  }
  std::sort(err10.begin(), err10.end());
  std::sort(err100.begin(), err100.end());
  CHECK(err100[25] < err10[25]);
}

TEST_CASE("ogd leaves theta unchanged at zero gradient") {
  auto model = dot_model(2);
  flex::OgdLearner::Options opts;
  opts.learning_rate = 0.05;
  const VectorXd theta0 = Eigen::Vector2d(0.5, -1.0);
  flex::OgdLearner learner(theta0, opts);
  // target generated by theta0 itself: residual and gradient vanish
  const VectorXd v = Eigen::Vector2d(1.0, 2.0);
  learner.update(*model, scalar_target(v, v.dot(theta0)));
  CHECK((learner.theta() - theta0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("ogd steps against the gradient sign") {
  auto model = dot_model(1);
  flex::OgdLearner::Options opts;
  opts.learning_rate = 0.05;
  flex::OgdLearner learner(VectorXd::Zero(1), opts);
  // v = 1, y = 2: gradient v(v^T th - y) = -2, so theta must increase
  learner.update(*model, scalar_target(VectorXd::Constant(1, 1.0), 2.0));
  CHECK(learner.theta()[0] > 0.0);
}

TEST_CASE("ogd buffer gradient matches finite differences of the buffer loss") {
  flex::MlpModel model(2, 1, 4);
  flex::OgdLearner::Options opts;
  flex::Rng rng(77);
  VectorXd theta = model.init_params(1);
  flex::OgdLearner learner(theta, opts);
  for (int i = 0; i < 12; ++i) {
    VectorXd x(2), u(1), y(2);
    for (int j = 0; j < 2; ++j) x[j] = 2.0 * rng.uniform() - 1.0;
    u[0] = 2.0 * rng.uniform() - 1.0;
    for (int j = 0; j < 2; ++j) y[j] = 2.0 * rng.uniform() - 1.0;
    learner.update(model, Target{StateAction(x, u), y});
  }
  const VectorXd grad = learner.buffer_gradient(model, theta);
  const double h = 1e-6;
  VectorXd tp = theta, tm = theta;
  for (int i = 0; i < theta.size(); ++i) {
    tp[i] = theta[i] + h;
    tm[i] = theta[i] - h;
    const double fd =
        (learner.buffer_loss(model, tp) - learner.buffer_loss(model, tm)) /
        (2.0 * h);
    const double scale = std::max(1.0, std::abs(fd));
    CHECK(std::abs(grad[i] - fd) / scale < 1e-4);
    tp[i] = theta[i];
    tm[i] = theta[i];
  }
}

TEST_CASE("ogd learns a frozen teacher network") {
  flex::MlpModel model(2, 1, 6);
  const VectorXd teacher = model.init_params(12345);

  flex::OgdLearner::Options opts;
  opts.learning_rate = 0.05;
  flex::OgdLearner learner(model.init_params(999), opts);

  flex::Rng rng(31415);
  double loss_at_100 = -1.0;
  for (int t = 1; t <= 2000; ++t) {
    VectorXd x(2), u(1);
    for (int j = 0; j < 2; ++j) x[j] = 2.0 * rng.uniform() - 1.0;
    u[0] = 2.0 * rng.uniform() - 1.0;
    const StateAction z(x, u);
    learner.update(model, Target{z, model.predict(z, teacher)});
    if (t == 100) loss_at_100 = learner.buffer_loss(model, learner.theta());
  }
  const double final_loss = learner.buffer_loss(model, learner.theta());
  CHECK(loss_at_100 > 0.0);
  CHECK(final_loss * 10.0 <= loss_at_100);
}
