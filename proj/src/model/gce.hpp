#pragma once

#include "nn/layers.hpp"

namespace grl {

// Video-level descriptor: arithmetic mean of the feature stack over the
// temporal and both spatial axes. [N,T,C,H,W] -> [N,C].
Tensor compute_global_descriptor(const Tensor& stack);

struct DisentangledFeatures {
  Tensor high;  // stack * corr        [N,T,C,H,W]
  Tensor low;   // stack * (1 - corr)  [N,T,C,H,W]
};

// Multiplicative split of the stack by a per-pixel mask broadcast across
// channels. high + low reconstructs the stack exactly up to rounding.
DisentangledFeatures disentangle(const Tensor& stack, const Tensor& corr);

// Estimates, for every frame and pixel, how strongly the local feature
// correlates with the whole video: the global descriptor is linearly
// projected, broadcast over space, concatenated with the frame features
// (global half first), squeezed through a 1x1-conv bottleneck with BN and
// ReLU, and mapped to a single sigmoid channel.
class GceModule : public Module {
 public:
  GceModule(Rng& rng, int64_t channels);

  // stack [N,T,C,H,W], g [N,C] -> correlation [N,T,1,H,W], all in (0,1).
  Tensor estimate_correlation(const Tensor& stack, const Tensor& g);

  int64_t hidden_channels() const { return hidden_; }

 private:
  int64_t channels_, hidden_;
  Linear proj_;    // C -> C applied to the descriptor before broadcast
  Conv2d conv1_;   // 2C -> hidden, 1x1
  BatchNorm2d bn_;
  Conv2d conv2_;   // hidden -> 1, 1x1
};

}  // namespace grl
