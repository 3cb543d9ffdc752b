#pragma once

#include <memory>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "nn/module.hpp"

namespace grl {

class Conv2d : public Module {
 public:
  Conv2d(Rng& rng, int64_t in_channels, int64_t out_channels, int kernel,
         int stride, int pad, bool bias);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor weight_, bias_;
  int stride_, pad_;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(int64_t channels);
  Tensor forward(const Tensor& x);

 private:
  Tensor gamma_, beta_, running_mean_, running_var_;
};

class Linear : public Module {
 public:
  Linear(Rng& rng, int64_t in_features, int64_t out_features, bool bias = true);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor weight_, bias_;
};

// Two 3x3 conv/BN pairs with a shortcut; the shortcut gets its own
// projection when the shape changes. Output passes through a final ReLU.
class ResidualBlock : public Module {
 public:
  ResidualBlock(Rng& rng, int64_t in_channels, int64_t out_channels, int stride);
  Tensor forward(const Tensor& x);

 private:
  Conv2d conv1_;
  BatchNorm2d bn1_;
  Conv2d conv2_;
  BatchNorm2d bn2_;
  std::unique_ptr<Conv2d> proj_conv_;
  std::unique_ptr<BatchNorm2d> proj_bn_;
};

}  // namespace grl
