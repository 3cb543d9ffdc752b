#pragma once

#include <array>
#include <cstdint>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "data/dataset.hpp"

namespace grl {

struct AugmentOptions {
  int64_t height = 256;
  int64_t width = 128;
  std::array<double, 3> mean = {0.5, 0.5, 0.5};
  std::array<double, 3> std = {0.25, 0.25, 0.25};
  int64_t pad = 8;             // zero padding before the random crop
  double flip_p = 0.5;         // horizontal flip, shared by the whole sequence
  double erase_p = 0.5;        // random erasing, drawn per frame
  double erase_min_area = 0.02;
  double erase_max_area = 0.20;
};

// Applies the training pipeline (pad+crop and flip drawn once per sequence,
// erasing drawn per frame) or, when train is false, normalization only.
// `frames` is [T, 3, H, W] with values in [0, 1]; the result has the same
// shape with channel-wise (x - mean) / std applied last.
Tensor augment_sequence(const Tensor& frames, bool train, const AugmentOptions& opts, Rng& rng);

// Loads the frames picked by `frame_indices` from a tracklet, resizes them to
// opts.height x opts.width and runs augment_sequence. Returns [T, 3, H, W].
Tensor load_clip(const TrackletRecord& record, const std::vector<int64_t>& frame_indices,
                 bool train, const AugmentOptions& opts, Rng& rng);

}  // namespace grl
