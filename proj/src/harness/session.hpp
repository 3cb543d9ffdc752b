#pragma once

#include <memory>
#include <string>

#include "harness/checkpoint.hpp"
#include "harness/config.hpp"
#include "model/grl_model.hpp"
#include "model/losses.hpp"
#include "nn/optim.hpp"

namespace grl {

// A model instance plus its identity tables, assembled from a config. The
// initializer stream is derived from the seed, so two sessions built from
// the same config start bitwise identical.
class Session {
 public:
  Session(const Config& cfg, int64_t train_identities);

  GrlModel& model() { return *model_; }
  OimTable* frame_table() { return oim_frame_.get(); }  // null for the baseline
  OimTable& video_table() { return *oim_video_; }
  int64_t train_identities() const { return train_identities_; }
  const Config& config() const { return cfg_; }

  // Serializes config, epoch counter, parameters, buffers, identity tables,
  // optimizer momentum (when given) and the RNG state string.
  CheckpointData snapshot(int64_t epochs_completed, const SgdOptimizer* opt,
                          const std::string& rng_state) const;

  // Restores everything snapshot wrote. The stored config must match this
  // session's config on every key except `resume`. Momentum is restored only
  // when an optimizer is supplied.
  void restore(const CheckpointData& data, SgdOptimizer* opt);

  // Number of epochs the stored run had completed.
  static int64_t stored_epochs(const CheckpointData& data);

 private:
  Config cfg_;
  int64_t train_identities_;
  std::unique_ptr<GrlModel> model_;
  std::unique_ptr<OimTable> oim_frame_;
  std::unique_ptr<OimTable> oim_video_;
};

}  // namespace grl
