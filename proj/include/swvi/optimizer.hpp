#pragma once

#include <Eigen/Core>

#include "swvi/errors.hpp"

namespace swvi {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_num = 1e-8;
};

struct OptimizerState {
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment
  long t = 0;
};

// Returns the parameter delta (to be added), i.e. -alpha * update(grad).
// Adam uses the standard bias-corrected moments; sgd is -alpha * grad.
Eigen::VectorXd optimizer_step(OptimizerState& state, const Eigen::VectorXd& grad, double alpha,
                               const OptimizerConfig& cfg);

inline Eigen::VectorXd adam_step(OptimizerState& state, const Eigen::VectorXd& grad, double alpha,
                                 double beta1, double beta2, double eps_num) {
  OptimizerConfig cfg{OptimizerKind::adam, beta1, beta2, eps_num};
  return optimizer_step(state, grad, alpha, cfg);
}

}  // namespace swvi
