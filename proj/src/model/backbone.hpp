#pragma once

#include <memory>
#include <vector>

#include "nn/layers.hpp"

namespace grl {

// Frame-level feature extractor seam: anything that maps an image batch
// [B, 3, H_img, W_img] to feature maps [B, C, H, W] can stand in, including
// an external pretrained network wrapped behind this signature.
class FeatureExtractor : public Module {
 public:
  virtual Tensor forward(const Tensor& frames) = 0;
  virtual int64_t out_channels() const = 0;
};

// Small four-stage residual network trainable on a CPU in minutes. Spatial
// strides are (2, 2, 2, 1) after a stride-2 stem, so the overall stride is
// 16 and the last stage keeps full resolution the way re-id networks drop
// their final down-sampling.
class DeskBackbone : public FeatureExtractor {
 public:
  DeskBackbone(Rng& rng, std::vector<int64_t> widths = {32, 64, 96, 128});

  Tensor forward(const Tensor& frames) override;
  int64_t out_channels() const override { return widths_.back(); }

 private:
  std::vector<int64_t> widths_;
  Conv2d stem_;
  BatchNorm2d stem_bn_;
  std::vector<std::unique_ptr<ResidualBlock>> blocks_;
  Conv2d proj_;  // 1x1 with bias; zeroing it makes the output linear-zero
};

// Runs the extractor frame-by-frame over [N, T, 3, H_img, W_img] and
// restores the temporal axis: output [N, T, C, H, W].
Tensor extract_features(FeatureExtractor& net, const Tensor& sequences);

}  // namespace grl
