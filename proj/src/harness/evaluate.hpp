#pragma once

#include <string>

#include "data/dataset.hpp"
#include "harness/config.hpp"
#include "metrics/metrics.hpp"
#include "model/grl_model.hpp"

namespace grl {

struct EvalOutput {
  EvalResult result;
  std::string feature;          // which embedding was ranked
  int64_t embedding_dim = 0;
  int64_t num_queries = 0;
  int64_t num_gallery = 0;
};

// Embeds every query and gallery tracklet (first-of-chunk frame sampling, no
// augmentation), L2-normalizes the chosen feature and ranks the gallery.
// The model is switched to eval mode for the duration of the call and
// restored afterwards.
EvalOutput evaluate_model(GrlModel& model, const TrackletIndex& index, const Config& cfg);

// Rebuilds the model from the config, loads the checkpoint and evaluates.
EvalOutput evaluate_checkpoint(const Config& cfg, const std::string& checkpoint_path,
                               const TrackletIndex& index);

// Writes report.txt (key-value lines) and report.json under out_dir.
void write_eval_report(const std::string& out_dir, const EvalOutput& out, const Config& cfg);

}  // namespace grl
