#pragma once

#include <cstdint>
#include <string>

#include "data/dataset.hpp"

namespace grl {

// Parameters of the generated dataset. Rendering is a pure function of this
// struct: the same spec produces byte-identical files at any location.
struct SyntheticSpec {
  int64_t identities = 8;
  int64_t cameras = 2;
  int64_t tracklets = 2;  // per identity and camera
  int64_t frames = 16;    // per tracklet
  int64_t height = 64;
  int64_t width = 32;
  double noise = 0.02;             // Gaussian pixel noise stddev
  double camera_variation = 0.3;   // background / illumination shift strength
  double occlusion = 0.0;          // per-frame chance of a bar covering the figure
  // Groups of this many consecutive identities share one appearance and are
  // told apart only by walking speed (1, 2, ... steps per frame). 1 gives
  // every identity its own appearance and unit speed.
  int64_t speed_groups = 1;
  uint64_t seed = 0;

  // kDisjoint assigns train and test identities by the same halving rule the
  // loader applies to bare trees. kShared trains on tracklet 0 of every
  // identity and camera, and evaluates on the remaining tracklets (camera 0
  // as query, the rest as gallery); it needs tracklets >= 2.
  enum class SplitMode { kDisjoint, kShared } split_mode = SplitMode::kDisjoint;
};

// Rejects non-renderable specs (non-positive counts, frames smaller than
// 16x8, negative noise, shared split without spare tracklets).
void validate_synthetic_spec(const SyntheticSpec& spec);

// Figures translate horizontally; the position cycles with this period.
int64_t trajectory_period(const SyntheticSpec& spec);

// Horizontal figure position of a given frame; identities advance by their
// walking speed each frame. With zero noise and zero camera variation,
// frames of one identity are byte-identical if and only if their positions
// match, so cameras differ only by the phase of the motion.
int64_t trajectory_position(const SyntheticSpec& spec, int64_t identity, int64_t camera,
                            int64_t tracklet, int64_t frame);

// Renders the dataset under out_dir (layout <id>/<camera>/<tracklet>/
// frame<n>.png plus manifest.txt) and returns the loaded index. A non-empty
// out_dir is rejected unless force is set, in which case it is replaced.
TrackletIndex generate_synthetic_dataset(const SyntheticSpec& spec, const std::string& out_dir,
                                         bool force = false);

}  // namespace grl
