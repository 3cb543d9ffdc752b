#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace grl {

// SGD with classical or Nesterov momentum and decoupled-from-nothing L2
// weight decay folded into the gradient, matching the common deep-learning
// convention: d = g + wd*p; buf = mu*buf + d; step along buf (or d + mu*buf
// for Nesterov).
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<Tensor> params, double lr, double momentum,
               double weight_decay, bool nesterov);

  void step();
  void zero_grad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  // Momentum state in parameter order, exposed for checkpointing.
  std::vector<std::vector<double>>& momentum_buffers() { return buffers_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> buffers_;
  double lr_, momentum_, weight_decay_;
  bool nesterov_;
};

}  // namespace grl
