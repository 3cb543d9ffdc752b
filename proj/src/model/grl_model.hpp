#pragma once

#include <memory>
#include <vector>

#include "model/backbone.hpp"
#include "model/gce.hpp"
#include "model/losses.hpp"
#include "model/trl.hpp"

namespace grl {

struct ModelOptions {
  std::vector<int64_t> backbone_widths = {32, 64, 96, 128};
  bool gce = true;
  bool trl = true;  // requires gce: the recurrence consumes the split stacks
  TrlOptions trl_opts;
  bool max_pool = false;  // temporal pooling of the high stream at test time
};

// The composed network. Ablation flags select between three structures:
//   gce=off            -> baseline: spatial+temporal average pooling only
//   gce=on,  trl=off   -> disentangled streams, pooled without recurrence
//   gce=on,  trl=on    -> full model with bidirectional memory recurrence
class GrlModel : public Module {
 public:
  GrlModel(Rng& rng, const ModelOptions& opts);

  struct ForwardResult {
    // Per-frame high-stream vectors [N,T,C]; undefined for the baseline.
    Tensor frame_vectors;
    // Video-level vector [N,C]: the accumulated low stream, or the pooled
    // baseline feature when gce is off.
    Tensor video_vector;
    // Retrieval embedding: concat(pooled high, video) [N,2C], or the
    // baseline vector [N,C].
    Tensor joint;
  };
  ForwardResult forward(const Tensor& sequences);  // [N,T,3,H_img,W_img]

  // Correlation maps and memory traces for visualization; call in eval
  // mode under a no-grad guard.
  struct Activations {
    Tensor correlation;              // [N,T,1,H,W]
    std::vector<Tensor> memory_fwd;  // per frame, [N,C,H,W]
    std::vector<Tensor> memory_bwd;
  };
  Activations activations(const Tensor& sequences);

  const ModelOptions& options() const { return opts_; }
  int64_t feature_channels() const { return backbone_->out_channels(); }
  int64_t embedding_dim() const {
    return opts_.gce ? 2 * feature_channels() : feature_channels();
  }
  FeatureExtractor& backbone() { return *backbone_; }
  GceModule* gce_module() { return gce_.get(); }
  TrlModule* trl_module() { return trl_.get(); }
  SimilarityHead* verification_head() { return veri_.get(); }

 private:
  ModelOptions opts_;
  std::unique_ptr<FeatureExtractor> backbone_;
  std::unique_ptr<GceModule> gce_;
  std::unique_ptr<TrlModule> trl_;
  std::unique_ptr<SimilarityHead> veri_;
};

}  // namespace grl
