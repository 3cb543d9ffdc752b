#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data/augment.hpp"
#include "data/synthetic.hpp"
#include "model/grl_model.hpp"
#include "model/losses.hpp"

namespace grl {

// Flat run configuration. Precedence is command line > config file > the
// defaults below; every field round-trips through the key=value text form.
struct Config {
  uint64_t seed = 0;
  std::string device = "cpu";

  // Sampling and optimization.
  int64_t seq_len = 8;
  int64_t batch_size = 16;
  int64_t epochs = 50;
  int64_t steps_per_epoch = 0;  // 0: one pass over the train tracklets
  double lr = 1e-3;
  double lr_decay_factor = 0.1;
  int64_t lr_decay_every = 15;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  bool nesterov = true;

  // Loss composition.
  double lambda_frame = 1.0;
  double lambda_video = 1.0;
  double lambda_veri = 1.0;
  double oim_momentum = 0.5;
  double oim_temperature = 1.0 / 30.0;

  // Input pipeline.
  int64_t image_height = 256;
  int64_t image_width = 128;
  double norm_mean = 0.5;
  double norm_std = 0.25;

  // Architecture.
  std::vector<int64_t> backbone_widths = {32, 64, 96, 128};
  bool gce = true;
  bool trl = true;
  std::string direction = "bi";      // forward | backward | bi
  bool enhancement = true;
  std::string memory = "residual";   // residual | identity | off
  bool tied = false;
  std::string pool = "mean";         // mean | max

  // Evaluation and checkpointing.
  std::string eval_feature = "joint";  // joint | high | low
  int64_t eval_max_rank = 20;
  int64_t eval_every = 0;              // epochs between held-out evals; 0 = off
  int64_t save_every = 1;              // epochs between checkpoints
  double early_stop_rank1 = 0.0;       // stop once reached; 0 = off
  std::string resume;                  // checkpoint path; empty = fresh run

  // Synthetic data generation.
  int64_t synth_identities = 8;
  int64_t synth_cameras = 2;
  int64_t synth_tracklets = 2;
  int64_t synth_frames = 16;
  int64_t synth_height = 64;
  int64_t synth_width = 32;
  double synth_noise = 0.02;
  double synth_camera_variation = 0.3;
  double synth_occlusion = 0.0;
  int64_t synth_speed_groups = 1;
  std::string synth_split = "disjoint";  // disjoint | shared

  // Ordered list of every key, shared by to_text and the property tests.
  static const std::vector<std::string>& keys();

  static Config from_file(const std::string& path);

  // Sets one key from its text form; unknown keys and malformed values are
  // configuration errors.
  void apply(const std::string& key, const std::string& value);
  void apply_override(const std::string& key_equals_value);
  std::string get(const std::string& key) const;

  std::string to_text() const;
  void validate() const;

  ModelOptions model_options() const;
  AugmentOptions augment_options() const;
  SyntheticSpec synthetic_spec() const;
  LossWeights loss_weights() const;
};

}  // namespace grl
