#include "nn/layers.hpp"

#include <cmath>

namespace grl {

Conv2d::Conv2d(Rng& rng, int64_t in_channels, int64_t out_channels, int kernel,
               int stride, int pad, bool bias)
    : stride_(stride), pad_(pad) {
  const double fan_in = static_cast<double>(in_channels * kernel * kernel);
  weight_ = register_param(
      "weight", Tensor::randn({out_channels, in_channels, kernel, kernel}, rng,
                              std::sqrt(2.0 / fan_in)));
  if (bias) bias_ = register_param("bias", Tensor::zeros({out_channels}));
}

Tensor Conv2d::forward(const Tensor& x) const {
  return conv2d(x, weight_, bias_, stride_, pad_);
}

BatchNorm2d::BatchNorm2d(int64_t channels) {
  gamma_ = register_param("gamma", Tensor::full({channels}, 1.0));
  beta_ = register_param("beta", Tensor::zeros({channels}));
  running_mean_ = register_buffer("running_mean", Tensor::zeros({channels}));
  running_var_ = register_buffer("running_var", Tensor::full({channels}, 1.0));
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  return batch_norm2d(x, gamma_, beta_, running_mean_, running_var_, training());
}

Linear::Linear(Rng& rng, int64_t in_features, int64_t out_features, bool bias) {
  weight_ = register_param(
      "weight", Tensor::randn({out_features, in_features}, rng,
                              std::sqrt(1.0 / static_cast<double>(in_features))));
  if (bias) bias_ = register_param("bias", Tensor::zeros({out_features}));
}

Tensor Linear::forward(const Tensor& x) const {
  return linear(x, weight_, bias_);
}

ResidualBlock::ResidualBlock(Rng& rng, int64_t in_channels,
                             int64_t out_channels, int stride)
    : conv1_(rng, in_channels, out_channels, 3, stride, 1, false),
      bn1_(out_channels),
      conv2_(rng, out_channels, out_channels, 3, 1, 1, false),
      bn2_(out_channels) {
  register_child("conv1", conv1_);
  register_child("bn1", bn1_);
  register_child("conv2", conv2_);
  register_child("bn2", bn2_);
  if (in_channels != out_channels || stride != 1) {
    proj_conv_ = std::make_unique<Conv2d>(rng, in_channels, out_channels, 1,
                                          stride, 0, false);
    proj_bn_ = std::make_unique<BatchNorm2d>(out_channels);
    register_child("proj_conv", *proj_conv_);
    register_child("proj_bn", *proj_bn_);
  }
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor y = bn2_.forward(conv2_.forward(relu(bn1_.forward(conv1_.forward(x)))));
  Tensor shortcut = proj_conv_ ? proj_bn_->forward(proj_conv_->forward(x)) : x;
  return relu(add(y, shortcut));
}

}  // namespace grl
