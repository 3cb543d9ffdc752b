#pragma once

#include <cstdint>
#include <vector>

#include "nn/layers.hpp"

namespace grl {

// Identity lookup table for online instance matching. Rows start at zero
// (scoring uniformly) and become unit-norm embeddings once touched by the
// momentum update. The table is a buffer, not a parameter: the loss treats
// it as constant and only the explicit update mutates it.
class OimTable {
 public:
  OimTable(int64_t identities, int64_t dim, double momentum = 0.5,
           double temperature = 1.0 / 30.0);

  // Mean over samples of -log softmax(<table, f_normalized> / temperature)
  // at the true identity. Gradients reach the features only.
  Tensor loss(const Tensor& features, const std::vector<int64_t>& labels) const;

  // Per sample, in batch order: w <- normalize((1-m)*w + m*normalize(f)).
  // Zero-norm features are skipped and counted.
  void update(const Tensor& features, const std::vector<int64_t>& labels);

  Tensor& entries() { return entries_; }
  const Tensor& entries() const { return entries_; }
  int64_t identities() const { return entries_.dim(0); }
  int64_t dim() const { return entries_.dim(1); }
  double momentum() const { return momentum_; }
  double temperature() const { return temperature_; }
  int64_t skipped_samples() const { return skipped_; }

 private:
  Tensor entries_;  // [I, dim]
  double momentum_, temperature_;
  int64_t skipped_ = 0;
};

// Probe-gallery similarity in (0,1); symmetric under argument swap because
// it reads only the elementwise absolute difference of the pair.
class SimilarityHead : public Module {
 public:
  SimilarityHead(Rng& rng, int64_t dim);

  Tensor logits(const Tensor& probe, const Tensor& gallery) const;      // [J]
  Tensor similarity(const Tensor& probe, const Tensor& gallery) const;  // [J]

 private:
  Linear fc_;
};

// Binary cross-entropy on the head's similarity for index-aligned pairs.
Tensor verification_loss(const Tensor& probe, const Tensor& gallery,
                         const std::vector<double>& targets,
                         const SimilarityHead& head);

struct LossWeights {
  double frame = 1.0;
  double video = 1.0;
  double verification = 1.0;
};

// Weighted sum of the three components. Undefined components contribute
// nothing (their branch of the model is disabled). All-zero weights are a
// configuration error.
Tensor total_loss(const Tensor& frame_loss, const Tensor& video_loss,
                  const Tensor& verification, const LossWeights& w);

}  // namespace grl
