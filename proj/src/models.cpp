#include "flex/models.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace flex {

// ---------------------------------------------------------------------------
// base defaults
// ---------------------------------------------------------------------------

MatrixXd Model::state_jacobian(const StateAction& z,
                               const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const double h = 1e-6;
  MatrixXd jac(d_, d_);
  StateAction zp = z, zm = z;
  for (int j = 0; j < d_; ++j) {
    const double step = h * std::max(1.0, std::abs(z.x[j]));
    zp.x[j] = z.x[j] + step;
    zm.x[j] = z.x[j] - step;
    jac.col(j) = (predict(zp, theta) - predict(zm, theta)) / (2.0 * step);
    zp.x[j] = z.x[j];
    zm.x[j] = z.x[j];
  }
  return jac;
}

void save_params(std::ostream& os, const Model& model, const VectorXd& theta) {
  os << "# model " << model.name() << " d " << model.state_dim() << " m "
     << model.input_dim() << " n " << model.param_dim() << "\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < theta.size(); ++i) os << theta[i] << "\n";
}

VectorXd load_params(std::istream& is, std::string* model_name) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# model ", 0) != 0) {
    throw std::invalid_argument("load_params: missing header");
  }
  std::istringstream header(line.substr(2));
  std::string tag, name, key;
  int d = 0, m = 0, n = 0;
  header >> tag >> name >> key >> d >> key >> m >> key >> n;
  if (model_name != nullptr) *model_name = name;
  VectorXd theta(n);
  for (int i = 0; i < n; ++i) {
    if (!(is >> theta[i])) {
      throw std::invalid_argument("load_params: truncated parameter vector");
    }
  }
  return theta;
}

// ---------------------------------------------------------------------------
// pendulum
// ---------------------------------------------------------------------------

MatrixXd PendulumLinearModel::feature_matrix(const StateAction& z) const {
  check_z(z);
  MatrixXd v = MatrixXd::Zero(2, 3);
  v(1, 0) = -std::sin(z.x[0]);
  v(1, 1) = -z.x[1];
  v(1, 2) = z.u[0];
  return v;
}

VectorXd PendulumLinearModel::offset(const StateAction& z) const {
  check_z(z);
  return Eigen::Vector2d(z.x[1], 0.0);
}

MatrixXd PendulumLinearModel::feature_state_jacobian(const StateAction& z,
                                                     const VectorXd& theta,
                                                     int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  MatrixXd jac = MatrixXd::Zero(3, 2);
  if (k == 1) {
    jac(0, 0) = -std::cos(z.x[0]);
    jac(1, 1) = -1.0;
  }
  return jac;
}

MatrixXd PendulumLinearModel::input_jacobian(const VectorXd& x,
                                             const VectorXd& theta,
                                             double dt) const {
  require(x.size() == 2, "pendulum: state dimension mismatch");
  check_theta(theta);
  return dt * Eigen::Vector2d(0.0, theta[2]);
}

MatrixXd PendulumLinearModel::state_jacobian(const StateAction& z,
                                             const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  MatrixXd jac(2, 2);
  jac << 0.0, 1.0, -theta[0] * std::cos(z.x[0]), -theta[1];
  return jac;
}

// ---------------------------------------------------------------------------
// custom linear
// ---------------------------------------------------------------------------

CustomLinearModel::CustomLinearModel(int d, int m, int n, FeatureFn features,
                                     OffsetFn offset,
                                     RowStateJacFn row_state_jac)
    : LinearModelBase(d, m, n),
      feature_fn_(std::move(features)),
      offset_fn_(std::move(offset)),
      row_state_jac_fn_(std::move(row_state_jac)) {
  require(static_cast<bool>(feature_fn_), "CustomLinearModel: features required");
  require(static_cast<bool>(offset_fn_), "CustomLinearModel: offset required");
}

MatrixXd CustomLinearModel::feature_matrix(const StateAction& z) const {
  check_z(z);
  MatrixXd v = feature_fn_(z);
  require(v.rows() == d_ && v.cols() == n_,
          "CustomLinearModel: feature matrix shape mismatch");
  return v;
}

VectorXd CustomLinearModel::offset(const StateAction& z) const {
  check_z(z);
  VectorXd c = offset_fn_(z);
  require(c.size() == d_, "CustomLinearModel: offset shape mismatch");
  return c;
}

MatrixXd CustomLinearModel::feature_state_jacobian(const StateAction& z,
                                                   const VectorXd& theta,
                                                   int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  if (row_state_jac_fn_) return row_state_jac_fn_(z, k);
  const double h = 1e-6;
  MatrixXd jac(n_, d_);
  StateAction zp = z, zm = z;
  for (int j = 0; j < d_; ++j) {
    const double step = h * std::max(1.0, std::abs(z.x[j]));
    zp.x[j] = z.x[j] + step;
    zm.x[j] = z.x[j] - step;
    jac.col(j) = (feature_matrix(zp).row(k) - feature_matrix(zm).row(k))
                     .transpose() /
                 (2.0 * step);
    zp.x[j] = z.x[j];
    zm.x[j] = z.x[j];
  }
  return jac;
}

MatrixXd CustomLinearModel::input_jacobian(const VectorXd& x,
                                           const VectorXd& theta,
                                           double dt) const {
  check_theta(theta);
  const double h = 1e-6;
  MatrixXd jac(d_, m_);
  StateAction zp(x, VectorXd::Zero(m_));
  StateAction zm = zp;
  for (int l = 0; l < m_; ++l) {
    zp.u[l] = h;
    zm.u[l] = -h;
    jac.col(l) = (predict(zp, theta) - predict(zm, theta)) / (2.0 * h);
    zp.u[l] = 0.0;
    zm.u[l] = 0.0;
  }
  return dt * jac;
}

// ---------------------------------------------------------------------------
// matrix model
// ---------------------------------------------------------------------------

MatrixFeatureModel::MatrixFeatureModel(int d, int m, FeatureMap map)
    : LinearModelBase(d, m, d * map.dim), map_(std::move(map)) {
  require(map_.dim >= 1, "MatrixFeatureModel: feature dim must be positive");
  require(static_cast<bool>(map_.phi), "MatrixFeatureModel: phi required");
}

MatrixXd MatrixFeatureModel::theta_as_matrix(const VectorXd& theta) const {
  using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                     Eigen::Dynamic,
                                                     Eigen::RowMajor>>;
  return RowMajorMap(theta.data(), d_, map_.dim);
}

MatrixXd MatrixFeatureModel::feature_matrix(const StateAction& z) const {
  check_z(z);
  const VectorXd p = map_.phi(z);
  require(p.size() == map_.dim, "MatrixFeatureModel: phi shape mismatch");
  MatrixXd v = MatrixXd::Zero(d_, n_);
  for (int k = 0; k < d_; ++k) {
    v.block(k, k * map_.dim, 1, map_.dim) = p.transpose();
  }
  return v;
}

VectorXd MatrixFeatureModel::offset(const StateAction& z) const {
  check_z(z);
  return VectorXd::Zero(d_);
}

MatrixXd MatrixFeatureModel::feature_state_jacobian(const StateAction& z,
                                                    const VectorXd& theta,
                                                    int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  require(static_cast<bool>(map_.dphi_dx), "MatrixFeatureModel: dphi_dx required");
  MatrixXd jac = MatrixXd::Zero(n_, d_);
  jac.block(k * map_.dim, 0, map_.dim, d_) = map_.dphi_dx(z);
  return jac;
}

MatrixXd MatrixFeatureModel::input_jacobian(const VectorXd& x,
                                            const VectorXd& theta,
                                            double dt) const {
  check_theta(theta);
  require(static_cast<bool>(map_.dphi_du), "MatrixFeatureModel: dphi_du required");
  const StateAction z(x, VectorXd::Zero(m_));
  return dt * theta_as_matrix(theta) * map_.dphi_du(z);
}

MatrixXd MatrixFeatureModel::state_jacobian(const StateAction& z,
                                            const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  require(static_cast<bool>(map_.dphi_dx), "MatrixFeatureModel: dphi_dx required");
  return theta_as_matrix(theta) * map_.dphi_dx(z);
}

// ---------------------------------------------------------------------------
// pendulum chain
// ---------------------------------------------------------------------------

ChainLinearModel::ChainLinearModel(int n_joints, double omega0_sq,
                                   double coupling, double input_gain)
    : LinearModelBase(2 * n_joints, 1, n_joints),
      joints_(n_joints),
      omega0_sq_(omega0_sq),
      coupling_(coupling),
      input_gain_(input_gain) {
  require(n_joints >= 1, "ChainLinearModel: need at least one joint");
}

MatrixXd ChainLinearModel::feature_matrix(const StateAction& z) const {
  check_z(z);
  MatrixXd v = MatrixXd::Zero(d_, joints_);
  for (int i = 0; i < joints_; ++i) v(joints_ + i, i) = -z.x[joints_ + i];
  return v;
}

VectorXd ChainLinearModel::offset(const StateAction& z) const {
  check_z(z);
  VectorXd c(d_);
  c.head(joints_) = z.x.tail(joints_);
  for (int i = 0; i < joints_; ++i) {
    double lap = -2.0 * z.x[i];
    if (i > 0) lap += z.x[i - 1];
    if (i + 1 < joints_) lap += z.x[i + 1];
    c[joints_ + i] = -omega0_sq_ * std::sin(z.x[i]) + coupling_ * lap;
  }
  c[joints_] += input_gain_ * z.u[0];
  return c;
}

MatrixXd ChainLinearModel::feature_state_jacobian(const StateAction& z,
                                                  const VectorXd& theta,
                                                  int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  MatrixXd jac = MatrixXd::Zero(joints_, d_);
  if (k >= joints_) {
    const int i = k - joints_;
    jac(i, joints_ + i) = -1.0;
  }
  return jac;
}

MatrixXd ChainLinearModel::input_jacobian(const VectorXd& x,
                                          const VectorXd& theta,
                                          double dt) const {
  check_theta(theta);
  MatrixXd jac = MatrixXd::Zero(d_, 1);
  jac(joints_, 0) = dt * input_gain_;
  return jac;
}

MatrixXd ChainLinearModel::state_jacobian(const StateAction& z,
                                          const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  MatrixXd jac = MatrixXd::Zero(d_, d_);
  for (int i = 0; i < joints_; ++i) {
    jac(i, joints_ + i) = 1.0;
    jac(joints_ + i, i) = -omega0_sq_ * std::cos(z.x[i]) - 2.0 * coupling_;
    if (i > 0) jac(joints_ + i, i - 1) = coupling_;
    if (i + 1 < joints_) jac(joints_ + i, i + 1) = coupling_;
    jac(joints_ + i, joints_ + i) = -theta[i];
  }
  return jac;
}

// ---------------------------------------------------------------------------
// plain MLP over z
// ---------------------------------------------------------------------------

MlpModel::MlpModel(int d, int m, int hidden)
    : Model(d, m, Mlp(d + m, hidden, d).param_dim()), net_(d + m, hidden, d) {}

VectorXd MlpModel::predict(const StateAction& z, const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  return net_.forward(theta, z.z());
}

MatrixXd MlpModel::features(const StateAction& z, const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  return net_.param_jacobian(theta, z.z());
}

MatrixXd MlpModel::feature_state_jacobian(const StateAction& z,
                                          const VectorXd& theta, int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  return net_.mixed_jacobian(theta, z.z(), k).leftCols(d_);
}

MatrixXd MlpModel::input_jacobian(const VectorXd& x, const VectorXd& theta,
                                  double dt) const {
  check_theta(theta);
  const StateAction z(x, VectorXd::Zero(m_));
  return dt * net_.input_jacobian(theta, z.z()).rightCols(m_);
}

MatrixXd MlpModel::state_jacobian(const StateAction& z,
                                  const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  return net_.input_jacobian(theta, z.z()).leftCols(d_);
}

// ---------------------------------------------------------------------------
// cartpole composite
// ---------------------------------------------------------------------------

CartpoleMlpModel::CartpoleMlpModel(int hidden)
    : Model(4, 1, Mlp(5, hidden, 8).param_dim()), net_(5, hidden, 8) {}

VectorXd CartpoleMlpModel::embed(const VectorXd& x) {
  VectorXd xi(5);
  xi << x[0], x[1], std::cos(x[2]), std::sin(x[2]), x[3];
  return xi;
}

MatrixXd CartpoleMlpModel::embed_jacobian(const VectorXd& x) {
  MatrixXd jac = MatrixXd::Zero(5, 4);
  jac(0, 0) = 1.0;
  jac(1, 1) = 1.0;
  jac(2, 2) = -std::sin(x[2]);
  jac(3, 2) = std::cos(x[2]);
  jac(4, 3) = 1.0;
  return jac;
}

VectorXd CartpoleMlpModel::predict(const StateAction& z,
                                   const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const VectorXd out = net_.forward(theta, embed(z.x));
  return out.head(4) + z.u[0] * out.tail(4);
}

MatrixXd CartpoleMlpModel::features(const StateAction& z,
                                    const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const MatrixXd jac = net_.param_jacobian(theta, embed(z.x));
  return jac.topRows(4) + z.u[0] * jac.bottomRows(4);
}

MatrixXd CartpoleMlpModel::feature_state_jacobian(const StateAction& z,
                                                  const VectorXd& theta,
                                                  int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  const VectorXd xi = embed(z.x);
  const MatrixXd mixed = net_.mixed_jacobian(theta, xi, k) +
                         z.u[0] * net_.mixed_jacobian(theta, xi, 4 + k);
  return mixed * embed_jacobian(z.x);
}

MatrixXd CartpoleMlpModel::input_jacobian(const VectorXd& x,
                                          const VectorXd& theta,
                                          double dt) const {
  check_theta(theta);
  const VectorXd out = net_.forward(theta, embed(x));
  return dt * out.tail(4);
}

MatrixXd CartpoleMlpModel::state_jacobian(const StateAction& z,
                                          const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const MatrixXd jac = net_.input_jacobian(theta, embed(z.x));
  return (jac.topRows(4) + z.u[0] * jac.bottomRows(4)) * embed_jacobian(z.x);
}

// ---------------------------------------------------------------------------
// arm composite
// ---------------------------------------------------------------------------

ArmMlpModel::ArmMlpModel(int hidden)
    : Model(4, 2, Mlp(6, hidden, 4).param_dim()), net_(6, hidden, 4) {}

VectorXd ArmMlpModel::embed(const VectorXd& x) {
  VectorXd xi(6);
  xi << std::cos(x[0]), std::sin(x[0]), x[1], std::cos(x[2]), std::sin(x[2]),
      x[3];
  return xi;
}

MatrixXd ArmMlpModel::embed_jacobian(const VectorXd& x) {
  MatrixXd jac = MatrixXd::Zero(6, 4);
  jac(0, 0) = -std::sin(x[0]);
  jac(1, 0) = std::cos(x[0]);
  jac(2, 1) = 1.0;
  jac(3, 2) = -std::sin(x[2]);
  jac(4, 2) = std::cos(x[2]);
  jac(5, 3) = 1.0;
  return jac;
}

VectorXd ArmMlpModel::predict(const StateAction& z,
                              const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  VectorXd f = net_.forward(theta, embed(z.x));
  f[1] += z.u[0];
  f[3] += z.u[1];
  return f;
}

MatrixXd ArmMlpModel::features(const StateAction& z,
                               const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  return net_.param_jacobian(theta, embed(z.x));
}

MatrixXd ArmMlpModel::feature_state_jacobian(const StateAction& z,
                                             const VectorXd& theta,
                                             int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  return net_.mixed_jacobian(theta, embed(z.x), k) * embed_jacobian(z.x);
}

MatrixXd ArmMlpModel::input_jacobian(const VectorXd& x, const VectorXd& theta,
                                     double dt) const {
  check_theta(theta);
  MatrixXd jac = MatrixXd::Zero(4, 2);
  jac(1, 0) = dt;
  jac(3, 1) = dt;
  return jac;
}

MatrixXd ArmMlpModel::state_jacobian(const StateAction& z,
                                     const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  return net_.input_jacobian(theta, embed(z.x)) * embed_jacobian(z.x);
}

// ---------------------------------------------------------------------------
// quadrotor residual
// ---------------------------------------------------------------------------

QuadrotorResidualModel::QuadrotorResidualModel(Body body, int hidden)
    : Model(6, 2, Mlp(2, hidden, 2).param_dim()),
      body_(body),
      net_(2, hidden, 2) {}

VectorXd QuadrotorResidualModel::predict(const StateAction& z,
                                         const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const double thrust = z.u[0] + z.u[1];
  const double phi = z.x[4];
  const VectorXd residual =
      net_.forward(theta, Eigen::Vector2d(z.x[1], z.x[3]));
  VectorXd f(6);
  f[0] = z.x[1];
  f[1] = -thrust * std::sin(phi) / body_.mass + residual[0];
  f[2] = z.x[3];
  f[3] = thrust * std::cos(phi) / body_.mass - body_.gravity + residual[1];
  f[4] = z.x[5];
  f[5] = body_.arm * (z.u[0] - z.u[1]) / body_.inertia;
  return f;
}

MatrixXd QuadrotorResidualModel::features(const StateAction& z,
                                          const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const MatrixXd jac =
      net_.param_jacobian(theta, Eigen::Vector2d(z.x[1], z.x[3]));
  MatrixXd v = MatrixXd::Zero(6, n_);
  v.row(1) = jac.row(0);
  v.row(3) = jac.row(1);
  return v;
}

MatrixXd QuadrotorResidualModel::feature_state_jacobian(const StateAction& z,
                                                        const VectorXd& theta,
                                                        int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  MatrixXd jac = MatrixXd::Zero(n_, 6);
  if (k == 1 || k == 3) {
    const MatrixXd mixed = net_.mixed_jacobian(
        theta, Eigen::Vector2d(z.x[1], z.x[3]), k == 1 ? 0 : 1);
    jac.col(1) = mixed.col(0);
    jac.col(3) = mixed.col(1);
  }
  return jac;
}

MatrixXd QuadrotorResidualModel::input_jacobian(const VectorXd& x,
                                                const VectorXd& theta,
                                                double dt) const {
  check_theta(theta);
  MatrixXd jac = MatrixXd::Zero(6, 2);
  const double s = std::sin(x[4]) / body_.mass;
  const double c = std::cos(x[4]) / body_.mass;
  jac(1, 0) = -s;
  jac(1, 1) = -s;
  jac(3, 0) = c;
  jac(3, 1) = c;
  jac(5, 0) = body_.arm / body_.inertia;
  jac(5, 1) = -body_.arm / body_.inertia;
  return dt * jac;
}

MatrixXd QuadrotorResidualModel::state_jacobian(const StateAction& z,
                                                const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const double thrust = z.u[0] + z.u[1];
  const double phi = z.x[4];
  const MatrixXd res_jac =
      net_.input_jacobian(theta, Eigen::Vector2d(z.x[1], z.x[3]));
  MatrixXd jac = MatrixXd::Zero(6, 6);
  jac(0, 1) = 1.0;
  jac(2, 3) = 1.0;
  jac(4, 5) = 1.0;
  jac(1, 4) = -thrust * std::cos(phi) / body_.mass;
  jac(3, 4) = -thrust * std::sin(phi) / body_.mass;
  jac(1, 1) += res_jac(0, 0);
  jac(1, 3) += res_jac(0, 1);
  jac(3, 1) += res_jac(1, 0);
  jac(3, 3) += res_jac(1, 1);
  return jac;
}

// ---------------------------------------------------------------------------
// star field
// ---------------------------------------------------------------------------

namespace {

constexpr double kMinRadius = 1e-9;
constexpr double kMinRhoSq = 1e-12;

// Scalar part of the force, its gradient and mixed second derivatives through
// h = ||q - kappa||^2 / rho^2 and g = 1/(1 + h).
struct FieldScalar {
  double g;
  Eigen::Vector3d g_theta;   // d g / d(kx, ky, rho)
  Eigen::Vector2d g_q;       // d g / d(qx, qy)
  Eigen::Matrix<double, 2, 3> g_q_theta;  // d^2 g / dq dtheta
  Eigen::Matrix2d g_q_q;     // d^2 g / dq dq

  FieldScalar(const Eigen::Vector2d& q, double kx, double ky, double rho) {
    const Eigen::Vector2d w = q - Eigen::Vector2d(kx, ky);
    const double rho_sq = std::max(rho * rho, kMinRhoSq);
    const double s = w.squaredNorm();
    const double h = s / rho_sq;
    g = 1.0 / (1.0 + h);
    const double g2 = g * g;
    const double g3 = g2 * g;

    const Eigen::Vector2d h_q = 2.0 * w / rho_sq;
    const Eigen::Vector3d h_theta(-2.0 * w[0] / rho_sq, -2.0 * w[1] / rho_sq,
                                  -2.0 * s / (rho_sq * rho));
    g_q = -g2 * h_q;
    g_theta = -g2 * h_theta;

    // h second derivatives: d^2 h / dq dtheta and d^2 h / dq dq
    Eigen::Matrix<double, 2, 3> h_qt = Eigen::Matrix<double, 2, 3>::Zero();
    h_qt(0, 0) = -2.0 / rho_sq;
    h_qt(1, 1) = -2.0 / rho_sq;
    h_qt(0, 2) = -4.0 * w[0] / (rho_sq * rho);
    h_qt(1, 2) = -4.0 * w[1] / (rho_sq * rho);

    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 3; ++b) {
        g_q_theta(a, b) = 2.0 * g3 * h_q[a] * h_theta[b] - g2 * h_qt(a, b);
      }
    }
    const Eigen::Matrix2d h_qq = (2.0 / rho_sq) * Eigen::Matrix2d::Identity();
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        g_q_q(a, b) = 2.0 * g3 * h_q[a] * h_q[b] - g2 * h_qq(a, b);
      }
    }
  }
};

// Unit direction with derivatives. In Origin mode the direction is
// theta-independent; in Star mode it moves with kappa.
struct FieldDirection {
  Eigen::Vector2d dir;
  Eigen::Matrix2d dir_q;                  // d dir / dq
  Eigen::Matrix<double, 2, 3> dir_theta;  // d dir / dtheta
  // T[k](j, l) = d^2 dir_k / dq_j dkappa_l (zero in Origin mode, and for rho)
  Eigen::Matrix2d dir_q_kappa[2];

  FieldDirection(const Eigen::Vector2d& q, double kx, double ky,
                 StarFieldModel::ForceCenter center) {
    const bool star = center == StarFieldModel::ForceCenter::Star;
    const Eigen::Vector2d w = star ? (q - Eigen::Vector2d(kx, ky)).eval() : q;
    const double r = std::max(w.norm(), kMinRadius);
    const Eigen::Vector2d d = w / r;
    dir = d;
    const Eigen::Matrix2d proj = Eigen::Matrix2d::Identity() - d * d.transpose();
    dir_q = proj / r;
    dir_theta.setZero();
    dir_q_kappa[0].setZero();
    dir_q_kappa[1].setZero();
    if (star) {
      dir_theta.leftCols<2>() = -proj / r;
      // d^2 dir_k / dw_j dw_l = (3 d_k d_j d_l - delta_kl d_j - delta_jl d_k
      //                          - delta_kj d_l) / r^2; kappa enters as -w.
      for (int k = 0; k < 2; ++k) {
        for (int j = 0; j < 2; ++j) {
          for (int l = 0; l < 2; ++l) {
            const double t =
                (3.0 * d[k] * d[j] * d[l] - (k == l ? d[j] : 0.0) -
                 (j == l ? d[k] : 0.0) - (k == j ? d[l] : 0.0)) /
                (r * r);
            dir_q_kappa[k](j, l) = -t;
          }
        }
      }
    }
  }
};

}  // namespace

StarFieldModel::StarFieldModel(ForceCenter center)
    : Model(4, 2, 3), center_(center) {}

Eigen::Vector2d StarFieldModel::force(const Eigen::Vector2d& q, double kx,
                                      double ky, double rho,
                                      ForceCenter center) {
  const FieldScalar sc(q, kx, ky, rho);
  const FieldDirection dr(q, kx, ky, center);
  return -sc.g * dr.dir;
}

VectorXd StarFieldModel::predict(const StateAction& z,
                                 const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const Eigen::Vector2d q(z.x[0], z.x[2]);
  const Eigen::Vector2d acc =
      force(q, theta[0], theta[1], theta[2], center_) + z.u;
  return Eigen::Vector4d(z.x[1], acc[0], z.x[3], acc[1]);
}

MatrixXd StarFieldModel::features(const StateAction& z,
                                  const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const Eigen::Vector2d q(z.x[0], z.x[2]);
  const FieldScalar sc(q, theta[0], theta[1], theta[2]);
  const FieldDirection dr(q, theta[0], theta[1], center_);
  MatrixXd v = MatrixXd::Zero(4, 3);
  for (int axis = 0; axis < 2; ++axis) {
    const int row = axis == 0 ? 1 : 3;
    v.row(row) = -(dr.dir[axis] * sc.g_theta.transpose() +
                   sc.g * dr.dir_theta.row(axis));
  }
  return v;
}

MatrixXd StarFieldModel::feature_state_jacobian(const StateAction& z,
                                                const VectorXd& theta,
                                                int k) const {
  check_z(z);
  check_theta(theta);
  check_row(k);
  MatrixXd jac = MatrixXd::Zero(3, 4);
  if (k != 1 && k != 3) return jac;
  const int axis = k == 1 ? 0 : 1;

  const Eigen::Vector2d q(z.x[0], z.x[2]);
  const FieldScalar sc(q, theta[0], theta[1], theta[2]);
  const FieldDirection dr(q, theta[0], theta[1], center_);

  // v_i = -(g_theta_i dir_axis + g dir_theta(axis, i)); differentiate in q_c.
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) {
      double val = sc.g_q_theta(c, i) * dr.dir[axis] +
                   sc.g_theta[i] * dr.dir_q(axis, c) +
                   sc.g_q[c] * dr.dir_theta(axis, i);
      if (i < 2) val += sc.g * dr.dir_q_kappa[axis](c, i);
      jac(i, c == 0 ? 0 : 2) = -val;
    }
  }
  return jac;
}

MatrixXd StarFieldModel::input_jacobian(const VectorXd& x,
                                        const VectorXd& theta,
                                        double dt) const {
  check_theta(theta);
  MatrixXd jac = MatrixXd::Zero(4, 2);
  jac(1, 0) = dt;
  jac(3, 1) = dt;
  return jac;
}

MatrixXd StarFieldModel::state_jacobian(const StateAction& z,
                                        const VectorXd& theta) const {
  check_z(z);
  check_theta(theta);
  const Eigen::Vector2d q(z.x[0], z.x[2]);
  const FieldScalar sc(q, theta[0], theta[1], theta[2]);
  const FieldDirection dr(q, theta[0], theta[1], center_);
  MatrixXd jac = MatrixXd::Zero(4, 4);
  jac(0, 1) = 1.0;
  jac(2, 3) = 1.0;
  for (int axis = 0; axis < 2; ++axis) {
    const int row = axis == 0 ? 1 : 3;
    for (int c = 0; c < 2; ++c) {
      jac(row, c == 0 ? 0 : 2) =
          -(sc.g_q[c] * dr.dir[axis] + sc.g * dr.dir_q(axis, c));
    }
  }
  return jac;
}

}  // namespace flex
