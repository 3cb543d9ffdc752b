#include "model/gce.hpp"

#include <algorithm>

namespace grl {

Tensor compute_global_descriptor(const Tensor& stack) {
  return mean_thw(stack);
}

DisentangledFeatures disentangle(const Tensor& stack, const Tensor& corr) {
  check_shape(stack.ndim() == 5 && corr.ndim() == 5 && corr.dim(2) == 1 &&
                  stack.dim(0) == corr.dim(0) && stack.dim(1) == corr.dim(1) &&
                  stack.dim(3) == corr.dim(3) && stack.dim(4) == corr.dim(4),
              "disentangle: stack " + shape_str(stack.shape()) +
                  " vs mask " + shape_str(corr.shape()));
  const int64_t n = stack.dim(0), t = stack.dim(1), c = stack.dim(2),
                h = stack.dim(3), w = stack.dim(4);
  Tensor x = reshape(stack, {n * t, c, h, w});
  Tensor r = reshape(corr, {n * t, 1, h, w});
  Tensor inv = add_scalar(mul_scalar(r, -1.0), 1.0);
  DisentangledFeatures out;
  out.high = reshape(mul_map(x, r), stack.shape());
  out.low = reshape(mul_map(x, inv), stack.shape());
  return out;
}

GceModule::GceModule(Rng& rng, int64_t channels)
    : channels_(channels),
      hidden_(std::max<int64_t>(channels / 8, 8)),
      proj_(rng, channels, channels),
      conv1_(rng, 2 * channels, hidden_, 1, 1, 0, true),
      bn_(hidden_),
      conv2_(rng, hidden_, 1, 1, 1, 0, true) {
  register_child("proj", proj_);
  register_child("conv1", conv1_);
  register_child("bn", bn_);
  register_child("conv2", conv2_);
}

Tensor GceModule::estimate_correlation(const Tensor& stack, const Tensor& g) {
  check_shape(stack.ndim() == 5, "estimate_correlation expects [N,T,C,H,W]");
  check_shape(g.ndim() == 2 && g.dim(0) == stack.dim(0) &&
                  g.dim(1) == stack.dim(2) && stack.dim(2) == channels_,
              "estimate_correlation: descriptor " + shape_str(g.shape()) +
                  " does not match stack " + shape_str(stack.shape()));
  const int64_t n = stack.dim(0), t = stack.dim(1), c = stack.dim(2),
                h = stack.dim(3), w = stack.dim(4);
  Tensor guide = expand_vector_spatial(proj_.forward(g), t, h, w);
  Tensor frames = reshape(stack, {n * t, c, h, w});
  Tensor joint = concat_channels(guide, frames);
  Tensor hidden = relu(bn_.forward(conv1_.forward(joint)));
  Tensor logit = conv2_.forward(hidden);
  return reshape(sigmoid(logit), {n, t, 1, h, w});
}

}  // namespace grl
