#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace flex {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// State-action pair z = (x u). The concatenation is materialized on demand so
// the two views can never drift apart.
struct StateAction {
  VectorXd x;
  VectorXd u;

  StateAction() = default;
  StateAction(VectorXd state, VectorXd input)
      : x(std::move(state)), u(std::move(input)) {
    if (!x.allFinite() || !u.allFinite()) {
      throw std::invalid_argument("StateAction: non-finite entries");
    }
  }

  Eigen::Index state_dim() const { return x.size(); }
  Eigen::Index input_dim() const { return u.size(); }

  VectorXd z() const {
    VectorXd out(x.size() + u.size());
    out << x, u;
    return out;
  }
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace flex
