#include "flex/environment.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace flex {

namespace {

// First primes, enough for the state dimensions in use.
constexpr int kHaltonBases[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

}  // namespace

std::vector<StateAction> build_grid(const GridSpec& spec, int input_dim) {
  const Eigen::Index dim = spec.lo.size();
  require(spec.hi.size() == dim, "GridSpec: lo/hi dimension mismatch");
  require((spec.hi - spec.lo).minCoeff() >= 0.0, "GridSpec: hi < lo");
  const VectorXd u = VectorXd::Zero(input_dim);
  std::vector<StateAction> grid;

  if (spec.kind == GridSpec::Kind::Regular) {
    require(static_cast<Eigen::Index>(spec.counts.size()) == dim,
            "GridSpec: counts dimension mismatch");
    long total = 1;
    for (int c : spec.counts) {
      require(c >= 1, "GridSpec: counts must be positive");
      total *= c;
    }
    grid.reserve(static_cast<std::size_t>(total));
    VectorXd x(dim);
    std::vector<int> idx(spec.counts.size(), 0);
    for (long p = 0; p < total; ++p) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        const int c = spec.counts[static_cast<std::size_t>(j)];
        const double frac =
            c == 1 ? 0.5 : static_cast<double>(idx[static_cast<std::size_t>(j)]) /
                               static_cast<double>(c - 1);
        x[j] = spec.lo[j] + frac * (spec.hi[j] - spec.lo[j]);
      }
      grid.emplace_back(x, u);
      for (Eigen::Index j = dim - 1; j >= 0; --j) {
        auto& i = idx[static_cast<std::size_t>(j)];
        if (++i < spec.counts[static_cast<std::size_t>(j)]) break;
        i = 0;
      }
    }
  } else {
    require(spec.count >= 1, "GridSpec: halton count must be positive");
    require(dim <= static_cast<Eigen::Index>(std::size(kHaltonBases)),
            "GridSpec: dimension too large for halton bases");
    grid.reserve(static_cast<std::size_t>(spec.count));
    VectorXd x(dim);
    for (int p = 0; p < spec.count; ++p) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        const double frac = halton(static_cast<std::uint64_t>(p + 1),
                                   kHaltonBases[j]);
        x[j] = spec.lo[j] + frac * (spec.hi[j] - spec.lo[j]);
      }
      grid.emplace_back(x, u);
    }
  }
  return grid;
}

Environment::Environment(int d, int m, double dt, double sigma, double gamma,
                         VectorXd x0, GridSpec grid)
    : d_(d),
      m_(m),
      dt_(dt),
      sigma_(sigma),
      gamma_(gamma),
      x0_(std::move(x0)),
      grid_(std::move(grid)) {
  require(dt_ > 0.0, "Environment: dt must be positive");
  require(sigma_ >= 0.0, "Environment: sigma must be nonnegative");
  require(gamma_ > 0.0, "Environment: gamma must be positive");
  require(x0_.size() == d_, "Environment: initial state dimension mismatch");
}

VectorXd Environment::step(const VectorXd& x, const VectorXd& u, double t,
                           Rng& rng) {
  require(x.size() == d_ && u.size() == m_, "Environment: dimension mismatch");
  VectorXd u_applied = u;
  const double norm = u.norm();
  if (norm > gamma_) {
    u_applied *= gamma_ / norm;
    // count only real violations, not ulp-level boundary round-off
    if (norm > gamma_ + 1e-9) ++clip_count_;
  }
  VectorXd next = x + dt_ * drift(x, u_applied, t);
  if (sigma_ > 0.0) next += rng.gaussian_vector(d_, sigma_);
  if (!next.allFinite()) {
    std::ostringstream msg;
    msg << name() << ": state diverged at t = " << t;
    throw SimulationDiverged(msg.str());
  }
  return next;
}

// ---------------------------------------------------------------------------

PendulumEnv::PendulumEnv(Params p, double dt, double sigma, double gamma,
                         VectorXd x0, GridSpec grid)
    : Environment(2, 1, dt, sigma, gamma, std::move(x0), std::move(grid)),
      params_(p) {}

VectorXd PendulumEnv::drift(const VectorXd& x, const VectorXd& u,
                            double t) const {
  return Eigen::Vector2d(x[1], -params_.omega0_sq * std::sin(x[0]) -
                                   params_.alpha * x[1] + params_.b * u[0]);
}

// ---------------------------------------------------------------------------

QuadrotorEnv::QuadrotorEnv(Params p, double dt, double sigma, double gamma,
                           VectorXd x0, GridSpec grid)
    : Environment(6, 2, dt, sigma, gamma, std::move(x0), std::move(grid)),
      params_(p) {}

VectorXd QuadrotorEnv::drift(const VectorXd& x, const VectorXd& u,
                             double t) const {
  const double thrust = u[0] + u[1];
  const double phi = x[4];
  VectorXd f(6);
  f[0] = x[1];
  f[1] = (-thrust * std::sin(phi) - params_.friction * std::abs(x[1]) * x[1]) /
         params_.mass;
  f[2] = x[3];
  f[3] = (thrust * std::cos(phi) - params_.friction * std::abs(x[3]) * x[3]) /
             params_.mass -
         params_.gravity;
  f[4] = x[5];
  f[5] = params_.arm * (u[0] - u[1]) / params_.inertia;
  return f;
}

QuadrotorResidualModel::Body QuadrotorEnv::body() const {
  return {params_.mass, params_.inertia, params_.arm, params_.gravity};
}

// ---------------------------------------------------------------------------

CartpoleEnv::CartpoleEnv(Params p, double dt, double sigma, double gamma,
                         VectorXd x0, GridSpec grid)
    : Environment(4, 1, dt, sigma, gamma, std::move(x0), std::move(grid)),
      params_(p) {}

VectorXd CartpoleEnv::drift(const VectorXd& x, const VectorXd& u,
                            double t) const {
  const double total_mass = params_.cart_mass + params_.pole_mass;
  const double ml = params_.pole_mass * params_.half_length;
  const double sin_phi = std::sin(x[2]);
  const double cos_phi = std::cos(x[2]);
  const double temp = (u[0] + ml * x[3] * x[3] * sin_phi) / total_mass;
  const double phi_acc =
      (params_.gravity * sin_phi - cos_phi * temp) /
      (params_.half_length *
       (4.0 / 3.0 - params_.pole_mass * cos_phi * cos_phi / total_mass));
  const double x_acc = temp - ml * phi_acc * cos_phi / total_mass;
  VectorXd f(4);
  f << x[1], x_acc, x[3], phi_acc;
  return f;
}

// ---------------------------------------------------------------------------

ArmEnv::ArmEnv(Params p, double dt, double sigma, double gamma, VectorXd x0,
               GridSpec grid)
    : Environment(4, 2, dt, sigma, gamma, std::move(x0), std::move(grid)),
      params_(p) {}

VectorXd ArmEnv::drift(const VectorXd& x, const VectorXd& u, double t) const {
  const double q2 = x[2];
  const double qd1 = x[1];
  const double qd2 = x[3];
  const double c2 = std::cos(q2);
  const double s2 = std::sin(q2);
  const auto& p = params_;

  Eigen::Matrix2d mass;
  mass(0, 0) = p.m1 * p.l1 * p.l1 +
               p.m2 * (p.l1 * p.l1 + p.l2 * p.l2 + 2.0 * p.l1 * p.l2 * c2);
  mass(0, 1) = p.m2 * (p.l2 * p.l2 + p.l1 * p.l2 * c2);
  mass(1, 0) = mass(0, 1);
  mass(1, 1) = p.m2 * p.l2 * p.l2;

  const double h = -p.m2 * p.l1 * p.l2 * s2;
  const Eigen::Vector2d coriolis(h * (2.0 * qd1 * qd2 + qd2 * qd2),
                                 -h * qd1 * qd1);
  const Eigen::Vector2d gravity(
      (p.m1 * p.l1 + p.m2 * p.l1) * p.gravity * std::sin(x[0]) +
          p.m2 * p.l2 * p.gravity * std::sin(x[0] + q2),
      p.m2 * p.l2 * p.gravity * std::sin(x[0] + q2));

  const Eigen::Vector2d acc =
      mass.inverse() * (Eigen::Vector2d(u[0], u[1]) - coriolis - gravity);
  VectorXd f(4);
  f << qd1, acc[0], qd2, acc[1];
  return f;
}

// ---------------------------------------------------------------------------

StarFieldEnv::StarFieldEnv(Params p, double dt, double sigma, double gamma,
                           VectorXd x0, GridSpec grid)
    : Environment(4, 2, dt, sigma, gamma, std::move(x0), std::move(grid)),
      params_(p) {
  require(params_.rho > 0.0, "StarFieldEnv: rho must be positive");
  require(params_.period > 0.0, "StarFieldEnv: period must be positive");
}

Eigen::Vector2d StarFieldEnv::star_position(double t) const {
  const double phase = 2.0 * M_PI * t / params_.period;
  return {std::cos(phase), std::sin(phase)};
}

VectorXd StarFieldEnv::theta_star(double t) const {
  const Eigen::Vector2d kappa = star_position(t);
  return Eigen::Vector3d(kappa[0], kappa[1], params_.rho);
}

VectorXd StarFieldEnv::drift(const VectorXd& x, const VectorXd& u,
                             double t) const {
  const Eigen::Vector2d kappa = star_position(t);
  const Eigen::Vector2d acc =
      StarFieldModel::force(Eigen::Vector2d(x[0], x[2]), kappa[0], kappa[1],
                            params_.rho, params_.center) +
      Eigen::Vector2d(u[0], u[1]);
  return Eigen::Vector4d(x[1], acc[0], x[3], acc[1]);
}

// ---------------------------------------------------------------------------

ChainEnv::ChainEnv(int n_joints, Params p, double dt, double sigma,
                   double gamma, VectorXd x0, GridSpec grid)
    : Environment(2 * n_joints, 1, dt, sigma, gamma, std::move(x0),
                  std::move(grid)),
      joints_(n_joints),
      params_(std::move(p)) {
  require(joints_ >= 1, "ChainEnv: need at least one joint");
  require(params_.friction.size() == joints_,
          "ChainEnv: friction vector size mismatch");
}

VectorXd ChainEnv::drift(const VectorXd& x, const VectorXd& u,
                         double t) const {
  VectorXd f(d_);
  f.head(joints_) = x.tail(joints_);
  for (int i = 0; i < joints_; ++i) {
    double lap = -2.0 * x[i];
    if (i > 0) lap += x[i - 1];
    if (i + 1 < joints_) lap += x[i + 1];
    f[joints_ + i] = -params_.friction[i] * x[joints_ + i] -
                     params_.omega0_sq * std::sin(x[i]) +
                     params_.coupling * lap;
  }
  f[joints_] += params_.input_gain * u[0];
  return f;
}

}  // namespace flex
