#include "data/augment.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "data/image_io.hpp"

namespace grl {

namespace {

// Shifts the frame content by (dy, dx) - pad, filling uncovered pixels with
// zero. Equivalent to zero-padding by `pad` and cropping at offset (dy, dx).
void pad_crop(double* frame, int64_t h, int64_t w, int64_t pad, int64_t dy, int64_t dx) {
  std::vector<double> src(frame, frame + 3 * h * w);
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        const int64_t sy = y + dy - pad;
        const int64_t sx = x + dx - pad;
        const bool inside = sy >= 0 && sy < h && sx >= 0 && sx < w;
        frame[(c * h + y) * w + x] = inside ? src[(c * h + sy) * w + sx] : 0.0;
      }
    }
  }
}

void flip_horizontal(double* frame, int64_t h, int64_t w) {
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      double* row = frame + (c * h + y) * w;
      std::reverse(row, row + w);
    }
  }
}

void erase_rectangle(double* frame, int64_t h, int64_t w, const AugmentOptions& opts, Rng& rng) {
  const double area = rng.uniform(opts.erase_min_area, opts.erase_max_area) *
                      static_cast<double>(h * w);
  const double aspect = rng.uniform(0.3, 1.0 / 0.3);
  const int64_t eh = std::clamp<int64_t>(std::llround(std::sqrt(area * aspect)), 1, h);
  const int64_t ew = std::clamp<int64_t>(std::llround(std::sqrt(area / aspect)), 1, w);
  const int64_t y0 = rng.uniform_int(h - eh + 1);
  const int64_t x0 = rng.uniform_int(w - ew + 1);
  const double fill = rng.uniform();
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t y = y0; y < y0 + eh; ++y) {
      for (int64_t x = x0; x < x0 + ew; ++x) frame[(c * h + y) * w + x] = fill;
    }
  }
}

}  // namespace

Tensor augment_sequence(const Tensor& frames, bool train, const AugmentOptions& opts, Rng& rng) {
  check_shape(frames.shape().size() == 4 && frames.shape()[1] == 3,
              "expected [T, 3, H, W] frames, got " + shape_str(frames.shape()));
  const int64_t t = frames.shape()[0];
  const int64_t h = frames.shape()[2];
  const int64_t w = frames.shape()[3];

  Tensor out = Tensor::from_vector(frames.shape(), frames.values());
  double* d = out.data();
  const int64_t frame_size = 3 * h * w;

  if (train) {
    const int64_t dy = rng.uniform_int(2 * opts.pad + 1);
    const int64_t dx = rng.uniform_int(2 * opts.pad + 1);
    const bool flip = rng.bernoulli(opts.flip_p);
    for (int64_t i = 0; i < t; ++i) {
      double* frame = d + i * frame_size;
      if (dy != opts.pad || dx != opts.pad) pad_crop(frame, h, w, opts.pad, dy, dx);
      if (flip) flip_horizontal(frame, h, w);
    }
    for (int64_t i = 0; i < t; ++i) {
      if (rng.bernoulli(opts.erase_p)) erase_rectangle(d + i * frame_size, h, w, opts, rng);
    }
  }

  for (int64_t i = 0; i < t; ++i) {
    for (int64_t c = 0; c < 3; ++c) {
      double* plane = d + i * frame_size + c * h * w;
      for (int64_t p = 0; p < h * w; ++p) plane[p] = (plane[p] - opts.mean[c]) / opts.std[c];
    }
  }
  return out;
}

Tensor load_clip(const TrackletRecord& record, const std::vector<int64_t>& frame_indices,
                 bool train, const AugmentOptions& opts, Rng& rng) {
  check_shape(!frame_indices.empty(), "cannot load an empty clip");
  Tensor frames =
      Tensor::zeros({static_cast<int64_t>(frame_indices.size()), 3, opts.height, opts.width});
  double* d = frames.data();
  const int64_t frame_size = 3 * opts.height * opts.width;
  for (size_t i = 0; i < frame_indices.size(); ++i) {
    const int64_t idx = frame_indices[i];
    check_shape(idx >= 0 && idx < static_cast<int64_t>(record.frames.size()),
                "frame index out of range");
    Tensor img = load_image(record.frames[idx], opts.height, opts.width);
    std::copy(img.data(), img.data() + frame_size, d + i * frame_size);
  }
  return augment_sequence(frames, train, opts, rng);
}

}  // namespace grl
