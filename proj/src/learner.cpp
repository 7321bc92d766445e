#include "flex/learner.hpp"

#include <cmath>

namespace flex {

Target make_target(const VectorXd& x, const VectorXd& u,
                   const VectorXd& x_next, double dt) {
  require(dt > 0.0, "make_target: dt must be positive");
  require(x.size() == x_next.size(), "make_target: state dimension mismatch");
  Target t{StateAction(x, u), (x_next - x) / dt};
  require(t.y.allFinite(), "make_target: non-finite target");
  return t;
}

RlsLearner::RlsLearner(std::shared_ptr<GramState> gram, VectorXd theta0)
    : Learner(std::move(theta0)), gram_(std::move(gram)) {
  require(gram_ != nullptr, "RlsLearner: gram state required");
  require(gram_->dim() == theta_.size(), "RlsLearner: dimension mismatch");
  rhs_ = gram_->matrix() * theta_;
}

void RlsLearner::update(const Model& model, const Target& target) {
  const auto* linear = dynamic_cast<const LinearModelBase*>(&model);
  if (linear == nullptr) {
    throw std::invalid_argument("RlsLearner: model is not exactly linear");
  }
  const MatrixXd v = linear->feature_matrix(target.z);
  const VectorXd c = linear->offset(target.z);
  for (int k = 0; k < model.state_dim(); ++k) {
    const VectorXd row = v.row(k).transpose();
    gram_->rank_one_update(row);
    rhs_ += row * (target.y[k] - c[k]);
    theta_ = gram_->inverse() * rhs_;
  }
}

OgdLearner::OgdLearner(VectorXd theta0, Options opts)
    : Learner(std::move(theta0)), opts_(opts) {
  require(opts_.learning_rate > 0.0, "OgdLearner: learning rate must be > 0");
  require(opts_.buffer_capacity >= 1, "OgdLearner: buffer capacity must be >= 1");
  moment1_ = VectorXd::Zero(theta_.size());
  moment2_ = VectorXd::Zero(theta_.size());
}

VectorXd OgdLearner::buffer_gradient(const Model& model,
                                     const VectorXd& theta) const {
  VectorXd grad = VectorXd::Zero(theta.size());
  for (const Target& t : buffer_) {
    const VectorXd residual = model.predict(t.z, theta) - t.y;
    grad.noalias() += model.features(t.z, theta).transpose() * residual;
  }
  return grad / static_cast<double>(buffer_.size());
}

double OgdLearner::buffer_loss(const Model& model,
                               const VectorXd& theta) const {
  double loss = 0.0;
  for (const Target& t : buffer_) {
    loss += 0.5 * (model.predict(t.z, theta) - t.y).squaredNorm();
  }
  return loss / static_cast<double>(buffer_.size());
}

void OgdLearner::update(const Model& model, const Target& target) {
  require(theta_.size() == model.param_dim(), "OgdLearner: dimension mismatch");
  buffer_.push_back(target);
  if (static_cast<int>(buffer_.size()) > opts_.buffer_capacity) {
    buffer_.pop_front();
  }

  VectorXd grad = buffer_gradient(model, theta_);
  const double gnorm = grad.norm();
  if (gnorm > opts_.gradient_clip) grad *= opts_.gradient_clip / gnorm;

  ++step_;
  moment1_ = opts_.beta1 * moment1_ + (1.0 - opts_.beta1) * grad;
  moment2_ = opts_.beta2 * moment2_ + (1.0 - opts_.beta2) * grad.cwiseAbs2();
  const double bias1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
  const VectorXd step = (moment1_ / bias1).array() /
                        ((moment2_ / bias2).array().sqrt() + opts_.eps);
  theta_ -= opts_.learning_rate * step.matrix();
}

}  // namespace flex
