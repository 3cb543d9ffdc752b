#include "data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "data/image_io.hpp"

namespace fs = std::filesystem;

namespace grl {

namespace {

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  if (h < 60) {
    r = c, g = x;
  } else if (h < 120) {
    r = x, g = c;
  } else if (h < 180) {
    g = c, b = x;
  } else if (h < 240) {
    g = x, b = c;
  } else if (h < 300) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  return {r + m, g + m, b + m};
}

struct Canvas {
  int64_t h, w;
  std::vector<double> px;  // [3, h, w]

  Canvas(int64_t h_, int64_t w_) : h(h_), w(w_), px(3 * h_ * w_, 0.0) {}

  void set(int64_t y, int64_t x, const Rgb& c) {
    if (y < 0 || y >= h || x < 0 || x >= w) return;
    px[0 * h * w + y * w + x] = c.r;
    px[1 * h * w + y * w + x] = c.g;
    px[2 * h * w + y * w + x] = c.b;
  }

  void fill_rect(int64_t y0, int64_t x0, int64_t y1, int64_t x1, const Rgb& c) {
    for (int64_t y = y0; y < y1; ++y) {
      for (int64_t x = x0; x < x1; ++x) set(y, x, c);
    }
  }

  void fill_ellipse(double cy, double cx, double ry, double rx, const Rgb& c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        const double dy = (y - cy) / ry;
        const double dx = (x - cx) / rx;
        if (dy * dy + dx * dx <= 1.0) set(y, x, c);
      }
    }
  }

  void fill_triangle(int64_t y0, int64_t y1, int64_t x0, int64_t x1, const Rgb& c) {
    // Apex centered at the top edge, base spanning [x0, x1) at y1.
    const double apex = 0.5 * (x0 + x1 - 1);
    for (int64_t y = y0; y < y1; ++y) {
      const double frac = y1 > y0 + 1 ? static_cast<double>(y - y0) / (y1 - 1 - y0) : 1.0;
      const double half = 0.5 * frac * (x1 - x0);
      for (int64_t x = x0; x < x1; ++x) {
        if (std::fabs(x - apex) <= half) set(y, x, c);
      }
    }
  }
};

Rgb scale(const Rgb& c, double k) { return {c.r * k, c.g * k, c.b * k}; }

int64_t figure_width(const SyntheticSpec& spec) { return std::max<int64_t>(spec.width / 4, 6); }
int64_t figure_height(const SyntheticSpec& spec) { return std::max<int64_t>(spec.height / 2, 12); }

// Identities within one speed group share every appearance attribute; their
// index within the group only changes how fast they move.
int64_t appearance_id(const SyntheticSpec& spec, int64_t identity) {
  return identity / spec.speed_groups;
}

int64_t appearance_classes(const SyntheticSpec& spec) {
  return (spec.identities + spec.speed_groups - 1) / spec.speed_groups;
}

int64_t walk_speed(const SyntheticSpec& spec, int64_t identity) {
  return 1 + identity % spec.speed_groups;
}

// Renders one frame before noise. Everything except the noise is a function
// of (identity, camera, position), which is what makes the phase oracle hold.
Canvas render_figure(const SyntheticSpec& spec, int64_t identity, int64_t camera,
                     int64_t position) {
  const int64_t hgt = spec.height;
  const int64_t wid = spec.width;
  Canvas canvas(hgt, wid);

  const double var = spec.camera_variation;
  const double bg_base = 0.15 + var * 0.08 * static_cast<double>(camera);
  const double gain = 1.0 + var * 0.1 * static_cast<double>(camera % 3 - 1);
  for (int64_t y = 0; y < hgt; ++y) {
    const double v = bg_base + 0.10 * static_cast<double>(y) / static_cast<double>(hgt);
    for (int64_t x = 0; x < wid; ++x) canvas.set(y, x, {v, v, v});
  }

  const int64_t looks = appearance_id(spec, identity);
  const double hue = 360.0 * static_cast<double>(looks) /
                     static_cast<double>(std::max<int64_t>(appearance_classes(spec), 1));
  const Rgb body = scale(hsv_to_rgb(hue, 0.85, 0.9), gain);
  const Rgb dark = scale(hsv_to_rgb(hue, 0.85, 0.9), 0.25 * gain);
  const Rgb skin = scale({0.9, 0.75, 0.6}, gain);

  const int64_t fw = figure_width(spec);
  const int64_t fh = figure_height(spec);
  const int64_t x0 = position;
  const int64_t y0 = std::max<int64_t>((hgt - fh) / 2 + (looks * 3) % 7 - 3, 0);

  // Head.
  const double head_r = fh / 8.0;
  canvas.fill_ellipse(y0 + fh / 6.0, x0 + fw / 2.0, head_r, head_r, skin);

  // Torso: shape variant cycles with the appearance.
  const int64_t torso_top = y0 + fh / 3;
  const int64_t torso_bot = y0 + (3 * fh) / 4;
  switch (looks % 3) {
    case 0:
      canvas.fill_rect(torso_top, x0, torso_bot, x0 + fw, body);
      break;
    case 1:
      canvas.fill_ellipse(0.5 * (torso_top + torso_bot), x0 + fw / 2.0,
                          0.5 * (torso_bot - torso_top), fw / 2.0, body);
      break;
    default:
      canvas.fill_triangle(torso_top, torso_bot, x0, x0 + fw, body);
      break;
  }

  // Legs.
  const int64_t leg_w = std::max<int64_t>(fw / 4, 1);
  canvas.fill_rect(torso_bot, x0 + leg_w / 2, y0 + fh, x0 + leg_w / 2 + leg_w, scale(body, 0.6));
  canvas.fill_rect(torso_bot, x0 + fw - leg_w / 2 - leg_w, y0 + fh, x0 + fw - leg_w / 2,
                   scale(body, 0.6));

  // Accessory variant: hat, belt, or boots.
  switch ((looks / 3) % 3) {
    case 0:
      canvas.fill_rect(y0, x0 + fw / 4, y0 + std::max<int64_t>(fh / 12, 1), x0 + (3 * fw) / 4,
                       dark);
      break;
    case 1:
      canvas.fill_rect((torso_top + torso_bot) / 2, x0,
                       (torso_top + torso_bot) / 2 + std::max<int64_t>(fh / 16, 1), x0 + fw, dark);
      break;
    default:
      canvas.fill_rect(y0 + fh - std::max<int64_t>(fh / 12, 1), x0, y0 + fh, x0 + fw, dark);
      break;
  }
  return canvas;
}

// Covers part of the figure with a vertical mid-gray bar, like a pole in
// front of the walkway. Drawn after the figure and before the noise, from a
// dedicated per-frame stream, so frames without occlusion stay byte-stable.
void draw_occluder(Canvas& canvas, const SyntheticSpec& spec, int64_t identity,
                   int64_t position, Rng& rng) {
  const int64_t fw = figure_width(spec);
  const int64_t fh = figure_height(spec);
  const int64_t y0 = std::max<int64_t>(
      (spec.height - fh) / 2 + (appearance_id(spec, identity) * 3) % 7 - 3, 0);
  const int64_t bar_w = std::max<int64_t>(fw / 2, 2);
  const int64_t x_start = position - fw / 4 + rng.uniform_int(fw);
  const double g = 0.3 + 0.4 * rng.uniform();
  canvas.fill_rect(y0, x_start, y0 + fh, x_start + bar_w, {g, g, g});
}

Split record_split(const SyntheticSpec& spec, int64_t identity, int64_t camera,
                   int64_t tracklet) {
  if (spec.split_mode == SyntheticSpec::SplitMode::kShared) {
    if (tracklet == 0) return Split::kTrain;
    return camera == 0 ? Split::kQuery : Split::kGallery;
  }
  if (identity < (spec.identities + 1) / 2) return Split::kTrain;
  return camera == 0 ? Split::kQuery : Split::kGallery;
}

}  // namespace

void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.identities <= 0 || spec.cameras <= 0 || spec.tracklets <= 0 || spec.frames <= 0) {
    throw ConfigError("synthetic dataset dimensions must be positive");
  }
  if (spec.height < 16 || spec.width < 8) {
    throw ConfigError("synthetic frames must be at least 16x8 pixels");
  }
  if (spec.noise < 0 || spec.camera_variation < 0) {
    throw ConfigError("noise and camera variation must be non-negative");
  }
  if (spec.occlusion < 0 || spec.occlusion > 1) {
    throw ConfigError("occlusion must be a probability in [0, 1]");
  }
  if (spec.speed_groups < 1) {
    throw ConfigError("speed_groups must be at least 1");
  }
  if (spec.split_mode == SyntheticSpec::SplitMode::kShared && spec.tracklets < 2) {
    throw ConfigError("shared split mode needs at least two tracklets per camera");
  }
}

namespace {

std::string two_digit(int64_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

int64_t trajectory_period(const SyntheticSpec& spec) {
  return std::max<int64_t>(spec.width - figure_width(spec), 1);
}

int64_t trajectory_position(const SyntheticSpec& spec, int64_t identity, int64_t camera,
                            int64_t tracklet, int64_t frame) {
  const int64_t period = trajectory_period(spec);
  const int64_t phase = (3 * identity + 5 * tracklet + 7 * camera) % period;
  return (phase + walk_speed(spec, identity) * frame) % period;
}

TrackletIndex generate_synthetic_dataset(const SyntheticSpec& spec, const std::string& out_dir,
                                         bool force) {
  validate_synthetic_spec(spec);
  const fs::path root(out_dir);
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!force) {
      throw DataError("output directory exists and is not empty (use force to replace): " +
                      out_dir);
    }
    fs::remove_all(root);
  }
  fs::create_directories(root);

  std::ofstream manifest(root / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest under " + out_dir);

  for (int64_t id = 0; id < spec.identities; ++id) {
    for (int64_t cam = 0; cam < spec.cameras; ++cam) {
      for (int64_t tr = 0; tr < spec.tracklets; ++tr) {
        const std::string rel = two_digit(id, 4) + "/" + std::to_string(cam) + "/" +
                                std::to_string(tr);
        fs::create_directories(root / rel);
        for (int64_t f = 0; f < spec.frames; ++f) {
          const int64_t pos = trajectory_position(spec, id, cam, tr, f);
          Canvas canvas = render_figure(spec, id, cam, pos);
          if (spec.occlusion > 0) {
            Rng rng(mix64(spec.seed, 0x6f63636cULL, static_cast<uint64_t>(id),
                          static_cast<uint64_t>(cam), static_cast<uint64_t>(tr),
                          static_cast<uint64_t>(f)));
            if (rng.bernoulli(spec.occlusion)) draw_occluder(canvas, spec, id, pos, rng);
          }
          if (spec.noise > 0) {
            Rng rng(mix64(spec.seed, 0x6672616d65ULL, static_cast<uint64_t>(id),
                          static_cast<uint64_t>(cam), static_cast<uint64_t>(tr),
                          static_cast<uint64_t>(f)));
            for (double& v : canvas.px) v += rng.normal(0.0, spec.noise);
          }
          // Quantize before writing so the stored bytes round-trip exactly.
          for (double& v : canvas.px) {
            v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
          }
          Tensor image = Tensor::from_vector({3, spec.height, spec.width}, canvas.px);
          save_image((root / rel / ("frame" + two_digit(f, 4) + ".png")).string(), image);
        }
        manifest << id << ',' << cam << ',' << tr << ','
                 << split_name(record_split(spec, id, cam, tr)) << ',' << rel << "/*.png\n";
      }
    }
  }
  manifest.close();
  return load_dataset_index(out_dir);
}

}  // namespace grl
