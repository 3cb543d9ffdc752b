#include "model/backbone.hpp"

namespace grl {

namespace {

constexpr int kStageStrides[4] = {2, 2, 2, 1};

std::vector<int64_t> validate_widths(std::vector<int64_t> widths) {
  check_shape(widths.size() == 4, "backbone expects exactly 4 stage widths, got " +
                                      std::to_string(widths.size()));
  for (int64_t w : widths)
    check_shape(w >= 1, "backbone stage width must be positive");
  return widths;
}

}  // namespace

DeskBackbone::DeskBackbone(Rng& rng, std::vector<int64_t> widths)
    : widths_(validate_widths(std::move(widths))),
      stem_(rng, 3, widths_[0], 3, 2, 1, false),
      stem_bn_(widths_[0]),
      proj_(rng, widths_[3], widths_[3], 1, 1, 0, true) {
  register_child("stem", stem_);
  register_child("stem_bn", stem_bn_);
  int64_t in = widths_[0];
  for (int i = 0; i < 4; ++i) {
    blocks_.push_back(std::make_unique<ResidualBlock>(rng, in, widths_[static_cast<size_t>(i)],
                                                      kStageStrides[i]));
    register_child("stage" + std::to_string(i + 1), *blocks_.back());
    in = widths_[static_cast<size_t>(i)];
  }
  register_child("proj", proj_);
}

Tensor DeskBackbone::forward(const Tensor& frames) {
  check_shape(frames.ndim() == 4 && frames.dim(1) == 3,
              "backbone expects [B,3,H,W] input, got " +
                  shape_str(frames.shape()));
  Tensor x = relu(stem_bn_.forward(stem_.forward(frames)));
  for (auto& block : blocks_) x = block->forward(x);
  return proj_.forward(x);
}

Tensor extract_features(FeatureExtractor& net, const Tensor& sequences) {
  check_shape(sequences.ndim() == 5 && sequences.dim(2) == 3,
              "extract_features expects [N,T,3,H,W], got " +
                  shape_str(sequences.shape()));
  const int64_t n = sequences.dim(0), t = sequences.dim(1);
  Tensor flat = reshape(sequences, {n * t, 3, sequences.dim(3), sequences.dim(4)});
  Tensor maps = net.forward(flat);
  return reshape(maps, {n, t, maps.dim(1), maps.dim(2), maps.dim(3)});
}

}  // namespace grl
