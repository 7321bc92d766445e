#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include <Eigen/Dense>

#include "flex/models.hpp"
#include "flex/rng.hpp"

using flex::MatrixXd;
using flex::Model;
using flex::StateAction;
using flex::VectorXd;

namespace {

constexpr double kFdStep = 1e-5;

// Central finite differences of the operations under test. These are the
// independent oracles; they only ever call predict / feature_row.
MatrixXd fd_features(const Model& m, const StateAction& z, const VectorXd& th) {
  MatrixXd jac(m.state_dim(), m.param_dim());
  VectorXd tp = th, tm = th;
  for (int i = 0; i < m.param_dim(); ++i) {
    tp[i] = th[i] + kFdStep;
    tm[i] = th[i] - kFdStep;
    jac.col(i) = (m.predict(z, tp) - m.predict(z, tm)) / (2.0 * kFdStep);
    tp[i] = th[i];
    tm[i] = th[i];
  }
  return jac;
}

MatrixXd fd_mixed(const Model& m, const StateAction& z, const VectorXd& th,
                  int k) {
  MatrixXd jac(m.param_dim(), m.state_dim());
  StateAction zp = z, zm = z;
  for (int j = 0; j < m.state_dim(); ++j) {
    zp.x[j] = z.x[j] + kFdStep;
    zm.x[j] = z.x[j] - kFdStep;
    jac.col(j) =
        (m.feature_row(zp, th, k) - m.feature_row(zm, th, k)) / (2.0 * kFdStep);
    zp.x[j] = z.x[j];
    zm.x[j] = z.x[j];
  }
  return jac;
}

MatrixXd fd_input_jacobian(const Model& m, const VectorXd& x,
                           const VectorXd& th, double dt) {
  MatrixXd jac(m.state_dim(), m.input_dim());
  StateAction zp(x, VectorXd::Zero(m.input_dim()));
  StateAction zm = zp;
  for (int l = 0; l < m.input_dim(); ++l) {
    zp.u[l] = kFdStep;
    zm.u[l] = -kFdStep;
    jac.col(l) = (m.predict(zp, th) - m.predict(zm, th)) / (2.0 * kFdStep);
    zp.u[l] = 0.0;
    zm.u[l] = 0.0;
  }
  return dt * jac;
}

double rel_err(const MatrixXd& got, const MatrixXd& want) {
  const double scale =
      std::max({1.0, got.cwiseAbs().maxCoeff(), want.cwiseAbs().maxCoeff()});
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

StateAction random_z(flex::Rng& rng, int d, int m, double x_scale = 2.0) {
  VectorXd x(d), u(m);
  for (int i = 0; i < d; ++i) x[i] = x_scale * (2.0 * rng.uniform() - 1.0);
  for (int i = 0; i < m; ++i) u[i] = 2.0 * rng.uniform() - 1.0;
  return StateAction(x, u);
}

VectorXd random_theta(flex::Rng& rng, int n, double scale = 1.0) {
  VectorXd th(n);
  for (int i = 0; i < n; ++i) th[i] = scale * (2.0 * rng.uniform() - 1.0);
  return th;
}

// The derivative battery every model has to pass: features, one feature row,
// the mixed state jacobian, the input jacobian and the state jacobian against
// central differences at random (z, theta).
void check_derivatives(const Model& m, flex::Rng& rng, int trials,
                       std::function<StateAction(flex::Rng&)> draw_z,
                       std::function<VectorXd(flex::Rng&)> draw_theta,
                       double tol_first = 1e-4, double tol_mixed = 1e-3) {
  for (int trial = 0; trial < trials; ++trial) {
    const StateAction z = draw_z(rng);
    const VectorXd th = draw_theta(rng);

    CHECK(rel_err(m.features(z, th), fd_features(m, z, th)) < tol_first);

    const int k = static_cast<int>(rng.next_u64() %
                                   static_cast<std::uint64_t>(m.state_dim()));
    CHECK(rel_err(m.feature_row(z, th, k).transpose(),
                  fd_features(m, z, th).row(k)) < tol_first);
    CHECK(rel_err(m.feature_state_jacobian(z, th, k), fd_mixed(m, z, th, k)) <
          tol_mixed);

    const double dt = 0.1;
    CHECK(rel_err(m.input_jacobian(z.x, th, dt),
                  fd_input_jacobian(m, z.x, th, dt)) < tol_first);

    const double h = 1e-5;
    MatrixXd fd_state(m.state_dim(), m.state_dim());
    StateAction zp = z, zm = z;
    for (int j = 0; j < m.state_dim(); ++j) {
      zp.x[j] = z.x[j] + h;
      zm.x[j] = z.x[j] - h;
      fd_state.col(j) = (m.predict(zp, th) - m.predict(zm, th)) / (2.0 * h);
      zp.x[j] = z.x[j];
      zm.x[j] = z.x[j];
    }
    CHECK(rel_err(m.state_jacobian(z, th), fd_state) < tol_mixed);
  }
}

}  // namespace

TEST_CASE("pendulum model: fixed point and textbook arithmetic") {
  flex::PendulumLinearModel model;
  const VectorXd theta = Eigen::Vector3d(1.0, 0.1, 1.0);

  const StateAction origin(VectorXd::Zero(2), VectorXd::Zero(1));
  CHECK(model.predict(origin, theta).isZero(1e-15));

  const StateAction z(Eigen::Vector2d(M_PI / 2, 0.5), VectorXd::Constant(1, 2.0));
  const VectorXd f = model.predict(z, theta);
  CHECK(f[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(0.95).epsilon(1e-12));

  MatrixXd v_expected(2, 3);
  v_expected << 0, 0, 0, -1, -0.5, 2;
  CHECK(model.features(z, theta).isApprox(v_expected, 1e-12));
  CHECK(model.feature_row(z, theta, 1).isApprox(Eigen::Vector3d(-1, -0.5, 2)));
  CHECK(model.feature_row(z, theta, 0).isZero(1e-15));
  CHECK_THROWS_AS(model.feature_row(z, theta, 2), std::invalid_argument);

  MatrixXd d_expected(3, 2);
  d_expected << -std::cos(M_PI / 2), 0, 0, -1, 0, 0;
  CHECK(model.feature_state_jacobian(z, theta, 1).isApprox(d_expected, 1e-12));
  CHECK(model.feature_state_jacobian(z, theta, 0).isZero(1e-15));

  const VectorXd theta_b2 = Eigen::Vector3d(1.0, 0.1, 2.0);
  const MatrixXd b = model.input_jacobian(z.x, theta_b2, 0.1);
  CHECK(b(0, 0) == doctest::Approx(0.0));
  CHECK(b(1, 0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("pendulum model derivatives match finite differences") {
  flex::PendulumLinearModel model;
  flex::Rng rng(5);
  check_derivatives(
      model, rng, 100, [](flex::Rng& r) { return random_z(r, 2, 1); },
      [](flex::Rng& r) { return random_theta(r, 3); });
}

TEST_CASE("linear models satisfy the affine identity exactly") {
  flex::PendulumLinearModel model;
  flex::Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const StateAction z = random_z(rng, 2, 1);
    const VectorXd th = random_theta(rng, 3);
    const VectorXd lhs =
        model.predict(z, th) - model.predict(z, VectorXd::Zero(3));
    const VectorXd rhs = model.features(z, th) * th;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("custom linear model falls back to finite differences") {
  // same pendulum structure, assembled from callables without analytic
  // jacobians
  flex::CustomLinearModel model(
      2, 1, 3,
      [](const StateAction& z) {
        MatrixXd v = MatrixXd::Zero(2, 3);
        v(1, 0) = -std::sin(z.x[0]);
        v(1, 1) = -z.x[1];
        v(1, 2) = z.u[0];
        return v;
      },
      [](const StateAction& z) { return VectorXd(Eigen::Vector2d(z.x[1], 0)); });
  flex::PendulumLinearModel reference;
  flex::Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const StateAction z = random_z(rng, 2, 1);
    const VectorXd th = random_theta(rng, 3);
    CHECK(model.predict(z, th).isApprox(reference.predict(z, th), 1e-12));
    CHECK(rel_err(model.feature_state_jacobian(z, th, 1),
                  reference.feature_state_jacobian(z, th, 1)) < 1e-6);
    CHECK(rel_err(model.input_jacobian(z.x, th, 0.1),
                  reference.input_jacobian(z.x, th, 0.1)) < 1e-6);
  }
}

TEST_CASE("matrix model: phi(z) = z reproduces the linear-dynamics features") {
  // d = 1, phi(z) = z in R^2 (one state, one input)
  flex::MatrixFeatureModel::FeatureMap map;
  map.dim = 2;
  map.phi = [](const StateAction& z) { return z.z(); };
  map.dphi_dx = [](const StateAction& z) {
    MatrixXd j = MatrixXd::Zero(2, 1);
    j(0, 0) = 1.0;
    return j;
  };
  map.dphi_du = [](const StateAction& z) {
    MatrixXd j = MatrixXd::Zero(2, 1);
    j(1, 0) = 1.0;
    return j;
  };
  flex::MatrixFeatureModel model(1, 1, map);
  CHECK(model.param_dim() == 2);

  const StateAction z(VectorXd::Constant(1, 0.3), VectorXd::Constant(1, -0.7));
  CHECK(model.features(z, VectorXd::Zero(2))
            .isApprox(z.z().transpose(), 1e-14));

  flex::Rng rng(21);
  check_derivatives(
      model, rng, 50, [](flex::Rng& r) { return random_z(r, 1, 1); },
      [](flex::Rng& r) { return random_theta(r, 2); });
}

TEST_CASE("matrix model: block features and reduced form rank candidates identically") {
  // d = 2, phi(z) = (x0, x1, u, 1): block-diagonal V in R^{2x8}
  flex::MatrixFeatureModel::FeatureMap map;
  map.dim = 4;
  map.phi = [](const StateAction& z) {
    return VectorXd(Eigen::Vector4d(z.x[0], z.x[1], z.u[0], 1.0));
  };
  map.dphi_dx = [](const StateAction& z) {
    MatrixXd j = MatrixXd::Zero(4, 2);
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    return j;
  };
  map.dphi_du = [](const StateAction& z) {
    MatrixXd j = MatrixXd::Zero(4, 1);
    j(2, 0) = 1.0;
    return j;
  };
  flex::MatrixFeatureModel model(2, 1, map);

  flex::Rng rng(33);
  const VectorXd theta = random_theta(rng, model.param_dim());

  // Gram in the full vectorized parametrization vs. the reduced phi form.
  MatrixXd gram_full = 1e-3 * MatrixXd::Identity(8, 8);
  MatrixXd gram_reduced = 1e-3 * MatrixXd::Identity(4, 4);
  for (int i = 0; i < 30; ++i) {
    const StateAction z = random_z(rng, 2, 1);
    const MatrixXd v = model.features(z, theta);
    gram_full += v.transpose() * v;
    const VectorXd p = model.phi(z);
    gram_reduced += 2.0 * p * p.transpose();  // both rows contribute phi
  }
  const MatrixXd inv_full = gram_full.inverse();
  const MatrixXd inv_reduced = gram_reduced.inverse();

  for (int rep = 0; rep < 100; ++rep) {
    int best_full = -1, best_reduced = -1;
    double top_full = -1e300, top_reduced = -1e300;
    for (int c = 0; c < 6; ++c) {
      const StateAction z = random_z(rng, 2, 1);
      const int k = static_cast<int>(rng.next_u64() % 2);
      const VectorXd v = model.feature_row(z, theta, k);
      const double gain_full = v.dot(inv_full * v);
      const VectorXd p = model.phi(z);
      const double gain_reduced = p.dot(inv_reduced * p);
      if (gain_full > top_full) { top_full = gain_full; best_full = c; }
      if (gain_reduced > top_reduced) { top_reduced = gain_reduced; best_reduced = c; }
    }
    CHECK(best_full == best_reduced);
  }
}

TEST_CASE("chain model features and known part") {
  flex::ChainLinearModel model(3, 1.0, 1.0, 1.0);
  CHECK(model.state_dim() == 6);
  CHECK(model.param_dim() == 3);

  flex::Rng rng(17);
  check_derivatives(
      model, rng, 50, [](flex::Rng& r) { return random_z(r, 6, 1); },
      [](flex::Rng& r) { return random_theta(r, 3, 0.5); });

  // features only touch the velocity of the same joint
  const StateAction z = random_z(rng, 6, 1);
  const VectorXd row = model.feature_row(z, VectorXd::Zero(3), 4);  // joint 1
  CHECK(row[0] == 0.0);
  CHECK(row[1] == doctest::Approx(-z.x[4]));
  CHECK(row[2] == 0.0);
}

TEST_CASE("mlp core: zero weights give the zero map") {
  flex::MlpModel model(2, 1, 8);
  const StateAction z(Eigen::Vector2d(0.3, -1.2), VectorXd::Constant(1, 0.5));
  CHECK(model.predict(z, VectorXd::Zero(model.param_dim())).isZero(1e-15));
}

TEST_CASE("mlp model derivatives match finite differences") {
  flex::MlpModel model(2, 1, 6);
  flex::Rng rng(29);
  check_derivatives(
      model, rng, 100, [](flex::Rng& r) { return random_z(r, 2, 1); },
      [&](flex::Rng& r) { return random_theta(r, model.param_dim()); });
}

TEST_CASE("cartpole composite derivatives match finite differences") {
  flex::CartpoleMlpModel model(8);
  flex::Rng rng(31);
  check_derivatives(
      model, rng, 100, [](flex::Rng& r) { return random_z(r, 4, 1); },
      [&](flex::Rng& r) { return random_theta(r, model.param_dim()); });
}

TEST_CASE("arm composite derivatives match finite differences") {
  flex::ArmMlpModel model(8);
  flex::Rng rng(37);
  check_derivatives(
      model, rng, 100, [](flex::Rng& r) { return random_z(r, 4, 2); },
      [&](flex::Rng& r) { return random_theta(r, model.param_dim()); });

  // torque map is exact: df/du is the known constant G
  const StateAction z = random_z(rng, 4, 2);
  const VectorXd th = random_theta(rng, model.param_dim());
  MatrixXd g_expected = MatrixXd::Zero(4, 2);
  g_expected(1, 0) = 0.1;
  g_expected(3, 1) = 0.1;
  CHECK(model.input_jacobian(z.x, th, 0.1).isApprox(g_expected, 1e-14));
}

TEST_CASE("quadrotor residual derivatives match finite differences") {
  flex::QuadrotorResidualModel model({}, 8);
  flex::Rng rng(41);
  check_derivatives(
      model, rng, 100, [](flex::Rng& r) { return random_z(r, 6, 2); },
      [&](flex::Rng& r) { return random_theta(r, model.param_dim()); });

  // kinematic rows carry no parameters
  const StateAction z = random_z(rng, 6, 2);
  const VectorXd th = random_theta(rng, model.param_dim());
  CHECK(model.feature_row(z, th, 0).isZero(1e-15));
  CHECK(model.feature_state_jacobian(z, th, 4).isZero(1e-15));
}

TEST_CASE("star-field model derivatives, both force conventions") {
  flex::Rng rng(43);
  auto draw_z = [](flex::Rng& r) {
    // keep the position away from the direction singularity
    while (true) {
      StateAction z = random_z(r, 4, 2);
      if (Eigen::Vector2d(z.x[0], z.x[2]).norm() > 0.3) return z;
    }
  };
  auto draw_theta = [](flex::Rng& r) {
    VectorXd th(3);
    th[0] = 0.6 * (2.0 * r.uniform() - 1.0);
    th[1] = 0.6 * (2.0 * r.uniform() - 1.0);
    th[2] = 0.3 + 1.7 * r.uniform();
    return th;
  };

  flex::StarFieldModel origin_model(flex::StarFieldModel::ForceCenter::Origin);
  check_derivatives(origin_model, rng, 100, draw_z, draw_theta);

  flex::StarFieldModel star_model(flex::StarFieldModel::ForceCenter::Star);
  auto draw_z_star = [&](flex::Rng& r) {
    // also keep q away from kappa used below; kappa magnitude <= 0.6+eps so
    // radius 1.5 keeps ||q - kappa|| > 0.3
    while (true) {
      StateAction z = random_z(r, 4, 2);
      if (Eigen::Vector2d(z.x[0], z.x[2]).norm() > 1.5) return z;
    }
  };
  check_derivatives(star_model, rng, 100, draw_z_star, draw_theta);
}

TEST_CASE("star-field force peaks at the star and decays with distance") {
  const double rho = 0.5;
  const Eigen::Vector2d kappa(0.4, -0.2);
  double prev = 1e9;
  for (double r = 0.0; r <= 3.0; r += 0.25) {
    const Eigen::Vector2d q = kappa + r * Eigen::Vector2d(1.0, 0.0);
    const double mag = flex::StarFieldModel::force(
                           q, kappa[0], kappa[1], rho,
                           flex::StarFieldModel::ForceCenter::Origin)
                           .norm();
    CHECK(mag <= prev + 1e-12);
    prev = mag;
  }
  // exactly at the star the magnitude is 1
  const double at_star = flex::StarFieldModel::force(
                             kappa, kappa[0], kappa[1], rho,
                             flex::StarFieldModel::ForceCenter::Origin)
                             .norm();
  CHECK(at_star == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("models with no input dependence have a zero input jacobian") {
  flex::CustomLinearModel model(
      2, 1, 2,
      [](const StateAction& z) {
        MatrixXd v = MatrixXd::Zero(2, 2);
        v(0, 0) = z.x[0];
        v(1, 1) = z.x[1];
        return v;
      },
      [](const StateAction& z) { return VectorXd(VectorXd::Zero(2)); });
  const VectorXd th = Eigen::Vector2d(0.5, -0.5);
  CHECK(model.input_jacobian(Eigen::Vector2d(1.0, 2.0), th, 0.1)
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("parameter checkpoints round-trip through the text format") {
  flex::PendulumLinearModel model;
  const VectorXd theta = Eigen::Vector3d(1.25, -0.5, 1e-7);
  std::stringstream buffer;
  flex::save_params(buffer, model, theta);
  std::string name;
  const VectorXd loaded = flex::load_params(buffer, &name);
  CHECK(name == "pendulum_linear");
  CHECK((loaded - theta).cwiseAbs().maxCoeff() < 1e-16);
}
