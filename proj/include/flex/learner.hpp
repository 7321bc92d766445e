#pragma once

#include <deque>
#include <memory>

#include "flex/gram.hpp"
#include "flex/model.hpp"

namespace flex {

// One observed transition, regression target y = (x_next - x) / dt.
struct Target {
  StateAction z;
  VectorXd y;
};

Target make_target(const VectorXd& x, const VectorXd& u, const VectorXd& x_next,
                   double dt);

class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual void update(const Model& model, const Target& target) = 0;
  const VectorXd& theta() const { return theta_; }

 protected:
  explicit Learner(VectorXd theta0) : theta_(std::move(theta0)) {
    require(theta_.allFinite(), "Learner: non-finite initial theta");
  }
  VectorXd theta_;
};

// Recursive least squares for exactly linear models. The Gram state is shared
// with the exploration policy: absorbing a feature row advances both the
// information matrix and the regression inverse, and theta stays equal to the
// eps-regularized batch least-squares estimate after every update.
//
// theta is recovered from the accumulated normal-equations right-hand side
// through the maintained inverse rather than by chaining the rank-one theta
// recursion, which is the same estimator but does not carry round-off from
// the ill-conditioned first n steps.
class RlsLearner : public Learner {
 public:
  RlsLearner(std::shared_ptr<GramState> gram, VectorXd theta0);

  std::string name() const override { return "rls"; }
  void update(const Model& model, const Target& target) override;
  const GramState& gram() const { return *gram_; }

 private:
  std::shared_ptr<GramState> gram_;
  VectorXd rhs_;  // M_0 theta_0 + sum of v (y - c) over absorbed rows
};

// Online gradient descent with adaptive per-coordinate steps over a small
// buffer of recent transitions; the nonlinear-model counterpart of RLS.
class OgdLearner : public Learner {
 public:
  struct Options {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int buffer_capacity = 100;
    double gradient_clip = 1e3;
  };

  OgdLearner(VectorXd theta0, Options opts);

  std::string name() const override { return "ogd"; }
  void update(const Model& model, const Target& target) override;

  // Mean squared-error loss over the buffer at the given parameters; exposed
  // for training-curve checks.
  double buffer_loss(const Model& model, const VectorXd& theta) const;
  VectorXd buffer_gradient(const Model& model, const VectorXd& theta) const;
  int buffer_size() const { return static_cast<int>(buffer_.size()); }

 private:
  Options opts_;
  std::deque<Target> buffer_;
  VectorXd moment1_, moment2_;
  long step_ = 0;
};

}  // namespace flex
