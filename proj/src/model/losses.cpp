#include "model/losses.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace grl {

OimTable::OimTable(int64_t identities, int64_t dim, double momentum,
                   double temperature)
    : entries_(Tensor::zeros({identities, dim})),
      momentum_(momentum),
      temperature_(temperature) {
  check_shape(identities >= 1 && dim >= 1, "oim table: empty geometry");
  if (momentum < 0.0 || momentum > 1.0)
    throw ConfigError("oim momentum must lie in [0,1]");
  if (temperature <= 0.0) throw ConfigError("oim temperature must be positive");
}

Tensor OimTable::loss(const Tensor& features,
                      const std::vector<int64_t>& labels) const {
  check_shape(features.ndim() == 2 && features.dim(1) == dim(),
              "oim loss: features " + shape_str(features.shape()) +
                  " vs table dim " + std::to_string(dim()));
  Tensor normalized = l2_normalize_rows(features);
  Tensor logits = mul_scalar(linear(normalized, entries_), 1.0 / temperature_);
  return cross_entropy_mean(logits, labels);
}

void OimTable::update(const Tensor& features, const std::vector<int64_t>& labels) {
  check_shape(features.ndim() == 2 && features.dim(1) == dim(),
              "oim update: feature dim mismatch");
  check_shape(static_cast<int64_t>(labels.size()) == features.dim(0),
              "oim update: label count mismatch");
  const int64_t d = dim();
  for (size_t i = 0; i < labels.size(); ++i) {
    const int64_t id = labels[i];
    check_shape(id >= 0 && id < identities(), "oim update: label out of range");
    const double* f = features.data() + static_cast<int64_t>(i) * d;
    double fn = 0.0;
    for (int64_t j = 0; j < d; ++j) fn += f[j] * f[j];
    fn = std::sqrt(fn);
    if (fn < 1e-12) {
      ++skipped_;
      continue;
    }
    double* w = entries_.data() + id * d;
    double wn = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      w[j] = (1.0 - momentum_) * w[j] + momentum_ * (f[j] / fn);
      wn += w[j] * w[j];
    }
    wn = std::sqrt(wn);
    if (wn > 1e-12)
      for (int64_t j = 0; j < d; ++j) w[j] /= wn;
  }
}

SimilarityHead::SimilarityHead(Rng& rng, int64_t dim) : fc_(rng, dim, 1) {
  register_child("fc", fc_);
}

Tensor SimilarityHead::logits(const Tensor& probe, const Tensor& gallery) const {
  check_shape(probe.shape() == gallery.shape() && probe.ndim() == 2,
              "similarity head: pair shapes " + shape_str(probe.shape()) +
                  " vs " + shape_str(gallery.shape()));
  Tensor z = fc_.forward(abs_val(sub(probe, gallery)));
  return reshape(z, {probe.dim(0)});
}

Tensor SimilarityHead::similarity(const Tensor& probe,
                                  const Tensor& gallery) const {
  return sigmoid(logits(probe, gallery));
}

Tensor verification_loss(const Tensor& probe, const Tensor& gallery,
                         const std::vector<double>& targets,
                         const SimilarityHead& head) {
  for (double y : targets)
    check_shape(y == 0.0 || y == 1.0, "verification targets must be binary");
  return bce_with_logits_mean(head.logits(probe, gallery), targets);
}

Tensor total_loss(const Tensor& frame_loss, const Tensor& video_loss,
                  const Tensor& verification, const LossWeights& w) {
  if (w.frame < 0.0 || w.video < 0.0 || w.verification < 0.0)
    throw ConfigError("loss weights must be nonnegative");
  if (w.frame + w.video + w.verification == 0.0)
    throw ConfigError("at least one loss weight must be positive");
  Tensor total = Tensor::scalar(0.0);
  if (frame_loss.defined() && w.frame > 0.0)
    total = add(total, mul_scalar(frame_loss, w.frame));
  if (video_loss.defined() && w.video > 0.0)
    total = add(total, mul_scalar(video_loss, w.video));
  if (verification.defined() && w.verification > 0.0)
    total = add(total, mul_scalar(verification, w.verification));
  return total;
}

}  // namespace grl
