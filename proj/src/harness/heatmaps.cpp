#include "harness/heatmaps.hpp"

#include <algorithm>
#include <filesystem>

#include "core/errors.hpp"
#include "data/augment.hpp"
#include "data/image_io.hpp"
#include "data/sampling.hpp"
#include "harness/session.hpp"

namespace fs = std::filesystem;

namespace grl {

namespace {

std::string two_digit(int64_t v) {
  return v < 10 ? "0" + std::to_string(v) : std::to_string(v);
}

// Channel-mean of one [C, H, W] block, rescaled to [0, 1] (flat 0.5 when the
// map is constant).
Tensor channel_mean_scaled(const double* data, int64_t c, int64_t h, int64_t w) {
  Tensor map = Tensor::zeros({h, w});
  double* m = map.data();
  for (int64_t ch = 0; ch < c; ++ch) {
    for (int64_t p = 0; p < h * w; ++p) m[p] += data[ch * h * w + p];
  }
  double lo = m[0], hi = m[0];
  for (int64_t p = 0; p < h * w; ++p) {
    m[p] /= static_cast<double>(c);
    lo = std::min(lo, m[p]);
    hi = std::max(hi, m[p]);
  }
  for (int64_t p = 0; p < h * w; ++p) {
    m[p] = hi > lo ? (m[p] - lo) / (hi - lo) : 0.5;
  }
  return map;
}

}  // namespace

HeatmapSummary export_heatmaps(GrlModel& model, const TrackletIndex& index, const Config& cfg,
                               const std::string& out_dir) {
  cfg.validate();
  if (!cfg.gce) {
    throw ConfigError("heatmap export needs gce=true: the baseline has no correlation maps");
  }
  std::vector<int64_t> candidates = index.records_of(Split::kQuery);
  if (candidates.empty()) candidates = index.records_of(Split::kTrain);
  if (candidates.empty()) throw DataError("no records available for heatmap export");
  const TrackletRecord& rec = index.records[candidates.front()];

  fs::create_directories(out_dir);
  const AugmentOptions aug = cfg.augment_options();
  Rng unused(0);
  const auto indices =
      rrs_sample(static_cast<int64_t>(rec.frames.size()), cfg.seq_len, false, unused);

  HeatmapSummary summary;
  summary.record = std::to_string(rec.identity) + "/" + std::to_string(rec.camera) + "/" +
                   std::to_string(rec.tracklet);

  // Input copies at model resolution, before normalization.
  for (int64_t t = 0; t < cfg.seq_len; ++t) {
    Tensor frame = load_image(rec.frames[indices[t]], aug.height, aug.width);
    save_image((fs::path(out_dir) / ("frame_" + two_digit(t) + ".png")).string(), frame);
    ++summary.frames_written;
  }

  Tensor clip = load_clip(rec, indices, false, aug, unused);
  Tensor batch = reshape(clip, {1, cfg.seq_len, 3, aug.height, aug.width});

  const bool was_training = model.training();
  model.set_training(false);
  GrlModel::Activations acts;
  {
    NoGradGuard guard;
    acts = model.activations(batch);
  }
  model.set_training(was_training);

  const Shape cs = acts.correlation.shape();  // [1, T, 1, h, w]
  const int64_t h = cs[3];
  const int64_t w = cs[4];
  for (int64_t t = 0; t < cfg.seq_len; ++t) {
    Tensor map = Tensor::zeros({h, w});
    std::copy(acts.correlation.data() + t * h * w, acts.correlation.data() + (t + 1) * h * w,
              map.data());
    Tensor big = resize_map(map, aug.height, aug.width);
    // Correlations are already in (0, 1); write them unscaled so a neutral
    // head (constant 0.5) lands exactly on gray value 128.
    save_image_gray((fs::path(out_dir) / ("corr_" + two_digit(t) + ".png")).string(), big);
    ++summary.maps_written;
  }

  const auto dump_memory = [&](const std::vector<Tensor>& trace, const std::string& tag) {
    for (size_t t = 0; t < trace.size(); ++t) {
      const Shape ms = trace[t].shape();  // [1, C, h, w]
      Tensor map = channel_mean_scaled(trace[t].data(), ms[1], ms[2], ms[3]);
      Tensor big = resize_map(map, aug.height, aug.width);
      double* b = big.data();
      for (int64_t p = 0; p < aug.height * aug.width; ++p) b[p] = std::clamp(b[p], 0.0, 1.0);
      save_image_pseudocolor(
          (fs::path(out_dir) / (tag + "_" + two_digit(static_cast<int64_t>(t)) + ".png"))
              .string(),
          big);
      ++summary.maps_written;
    }
  };
  dump_memory(acts.memory_fwd, "mem_fwd");
  dump_memory(acts.memory_bwd, "mem_bwd");
  return summary;
}

HeatmapSummary export_heatmaps_checkpoint(const Config& cfg, const std::string& checkpoint_path,
                                          const TrackletIndex& index,
                                          const std::string& out_dir) {
  const CheckpointData data = load_checkpoint(checkpoint_path);
  Session session(cfg, data.get_int("train_identities"));
  session.restore(data, nullptr);
  return export_heatmaps(session.model(), index, cfg, out_dir);
}

}  // namespace grl
