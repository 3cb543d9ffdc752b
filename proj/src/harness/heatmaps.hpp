#pragma once

#include <string>

#include "data/dataset.hpp"
#include "harness/config.hpp"
#include "model/grl_model.hpp"

namespace grl {

struct HeatmapSummary {
  int64_t frames_written = 0;  // input frame copies
  int64_t maps_written = 0;    // correlation + memory maps
  std::string record;          // identity/camera/tracklet of the visualized clip
};

// Visualizes one tracklet (the first query record, or the first train record
// when no query exists). Per sampled frame it writes:
//   frame_<t>.png     input frame copy at model resolution
//   corr_<t>.png      correlation map, upsampled, grayscale (0.5 -> 128)
//   mem_fwd_<t>.png / mem_bwd_<t>.png
//                     channel-mean memory activation, min-max scaled,
//                     upsampled, JET pseudocolor
// Memory maps exist per active recurrence direction. Needs gce=true.
HeatmapSummary export_heatmaps(GrlModel& model, const TrackletIndex& index, const Config& cfg,
                               const std::string& out_dir);

HeatmapSummary export_heatmaps_checkpoint(const Config& cfg, const std::string& checkpoint_path,
                                          const TrackletIndex& index,
                                          const std::string& out_dir);

}  // namespace grl
