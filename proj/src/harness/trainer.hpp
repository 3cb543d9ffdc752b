#pragma once

#include <memory>
#include <string>

#include "data/dataset.hpp"
#include "harness/config.hpp"
#include "harness/session.hpp"

namespace grl {

struct TrainResult {
  int64_t epochs_completed = 0;
  double final_loss = 0.0;
  bool early_stopped = false;
  double last_rank1 = -1.0;  // -1: never evaluated
  double last_map = -1.0;
  std::string checkpoint_path;
};

// Runs the training loop: mine pairs, sample frames, augment, forward,
// compose the losses, step, update the identity tables. Writes train.log
// (line-delimited step records), epoch_losses.csv and last.ckpt under
// out_dir. A non-finite loss aborts the run; the checkpoint of the last
// completed epoch is left in place.
class Trainer {
 public:
  Trainer(const Config& cfg, const TrackletIndex& index, std::string out_dir);

  TrainResult run();

  Session& session() { return *session_; }

 private:
  Config cfg_;
  const TrackletIndex& index_;
  std::string out_dir_;
  std::unique_ptr<Session> session_;
};

}  // namespace grl
