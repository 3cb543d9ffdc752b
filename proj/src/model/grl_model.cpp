#include "model/grl_model.hpp"

#include "core/errors.hpp"

namespace grl {

GrlModel::GrlModel(Rng& rng, const ModelOptions& opts) : opts_(opts) {
  if (opts_.trl && !opts_.gce)
    throw ConfigError("trl requires gce: the recurrence runs on the split streams");
  backbone_ = std::make_unique<DeskBackbone>(rng, opts_.backbone_widths);
  register_child("backbone", *backbone_);
  const int64_t c = backbone_->out_channels();
  if (opts_.gce) {
    gce_ = std::make_unique<GceModule>(rng, c);
    register_child("gce", *gce_);
    if (opts_.trl) {
      trl_ = std::make_unique<TrlModule>(rng, c, opts_.trl_opts);
      register_child("trl", *trl_);
    }
    veri_ = std::make_unique<SimilarityHead>(rng, 2 * c);
    register_child("veri", *veri_);
  }
}

GrlModel::ForwardResult GrlModel::forward(const Tensor& sequences) {
  const int64_t n = sequences.dim(0), t = sequences.dim(1);
  Tensor stack = extract_features(*backbone_, sequences);
  const int64_t c = stack.dim(2);
  ForwardResult out;
  if (!opts_.gce) {
    Tensor per_frame = reshape(gap_hw(reshape(stack, {n * t, c, stack.dim(3),
                                                      stack.dim(4)})),
                               {n, t, c});
    out.video_vector = temporal_pool(per_frame, false);
    out.joint = out.video_vector;
    return out;
  }
  Tensor global = compute_global_descriptor(stack);
  Tensor corr = gce_->estimate_correlation(stack, global);
  DisentangledFeatures split = disentangle(stack, corr);
  if (opts_.trl) {
    TrlModule::Output trl_out = trl_->forward(split.high, split.low);
    out.frame_vectors = trl_out.per_step_fused;
    out.video_vector = trl_out.low_final;
  } else {
    out.frame_vectors = reshape(
        gap_hw(reshape(split.high, {n * t, c, stack.dim(3), stack.dim(4)})),
        {n, t, c});
    out.video_vector = gap_hw(mean_time_maps(split.low));
  }
  VideoEmbedding emb =
      test_time_embedding(out.frame_vectors, out.video_vector, opts_.max_pool);
  out.joint = emb.joint;
  return out;
}

GrlModel::Activations GrlModel::activations(const Tensor& sequences) {
  if (!opts_.gce)
    throw ConfigError("activation export requires the correlation module");
  Tensor stack = extract_features(*backbone_, sequences);
  Activations acts;
  acts.correlation = gce_->estimate_correlation(stack, compute_global_descriptor(stack));
  if (opts_.trl) {
    DisentangledFeatures split = disentangle(stack, acts.correlation);
    const TrlOptions& topts = trl_->options();
    if (topts.direction != Direction::kBackward)
      acts.memory_fwd =
          trl_->run_direction(split.high, split.low, false, true).memory_trace;
    if (topts.direction != Direction::kForward)
      acts.memory_bwd =
          trl_->run_direction(split.high, split.low, true, true).memory_trace;
  }
  return acts;
}

}  // namespace grl
