#include "harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace grl {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const int64_t out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const uint64_t out = std::stoull(v, &used);
    if (used != v.size() || (!v.empty() && v[0] == '-')) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<int64_t> parse_i64_list(const std::string& key, const std::string& v) {
  std::vector<int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_i64(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "' expects a comma-separated list");
  return out;
}

std::string fmt_f64(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string fmt_i64_list(const std::vector<int64_t>& v) {
  std::ostringstream out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << v[i];
  }
  return out.str();
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> list = {
      "seed",          "device",
      "seq_len",       "batch_size",
      "epochs",        "steps_per_epoch",
      "lr",            "lr_decay_factor",
      "lr_decay_every", "weight_decay",
      "momentum",      "nesterov",
      "lambda_frame",  "lambda_video",
      "lambda_veri",   "oim_momentum",
      "oim_temperature", "image_height",
      "image_width",   "norm_mean",
      "norm_std",      "backbone_widths",
      "gce",           "trl",
      "direction",     "enhancement",
      "memory",        "tied",
      "pool",          "eval_feature",
      "eval_max_rank", "eval_every",
      "save_every",    "early_stop_rank1",
      "resume",        "synth_identities",
      "synth_cameras", "synth_tracklets",
      "synth_frames",  "synth_height",
      "synth_width",   "synth_noise",
      "synth_camera_variation", "synth_occlusion",
      "synth_speed_groups", "synth_split",
  };
  return list;
}

void Config::apply(const std::string& key, const std::string& value) {
  if (key == "seed") seed = parse_u64(key, value);
  else if (key == "device") device = value;
  else if (key == "seq_len") seq_len = parse_i64(key, value);
  else if (key == "batch_size") batch_size = parse_i64(key, value);
  else if (key == "epochs") epochs = parse_i64(key, value);
  else if (key == "steps_per_epoch") steps_per_epoch = parse_i64(key, value);
  else if (key == "lr") lr = parse_f64(key, value);
  else if (key == "lr_decay_factor") lr_decay_factor = parse_f64(key, value);
  else if (key == "lr_decay_every") lr_decay_every = parse_i64(key, value);
  else if (key == "weight_decay") weight_decay = parse_f64(key, value);
  else if (key == "momentum") momentum = parse_f64(key, value);
  else if (key == "nesterov") nesterov = parse_bool(key, value);
  else if (key == "lambda_frame") lambda_frame = parse_f64(key, value);
  else if (key == "lambda_video") lambda_video = parse_f64(key, value);
  else if (key == "lambda_veri") lambda_veri = parse_f64(key, value);
  else if (key == "oim_momentum") oim_momentum = parse_f64(key, value);
  else if (key == "oim_temperature") oim_temperature = parse_f64(key, value);
  else if (key == "image_height") image_height = parse_i64(key, value);
  else if (key == "image_width") image_width = parse_i64(key, value);
  else if (key == "norm_mean") norm_mean = parse_f64(key, value);
  else if (key == "norm_std") norm_std = parse_f64(key, value);
  else if (key == "backbone_widths") backbone_widths = parse_i64_list(key, value);
  else if (key == "gce") gce = parse_bool(key, value);
  else if (key == "trl") trl = parse_bool(key, value);
  else if (key == "direction") direction = value;
  else if (key == "enhancement") enhancement = parse_bool(key, value);
  else if (key == "memory") memory = value;
  else if (key == "tied") tied = parse_bool(key, value);
  else if (key == "pool") pool = value;
  else if (key == "eval_feature") eval_feature = value;
  else if (key == "eval_max_rank") eval_max_rank = parse_i64(key, value);
  else if (key == "eval_every") eval_every = parse_i64(key, value);
  else if (key == "save_every") save_every = parse_i64(key, value);
  else if (key == "early_stop_rank1") early_stop_rank1 = parse_f64(key, value);
  else if (key == "resume") resume = value;
  else if (key == "synth_identities") synth_identities = parse_i64(key, value);
  else if (key == "synth_cameras") synth_cameras = parse_i64(key, value);
  else if (key == "synth_tracklets") synth_tracklets = parse_i64(key, value);
  else if (key == "synth_frames") synth_frames = parse_i64(key, value);
  else if (key == "synth_height") synth_height = parse_i64(key, value);
  else if (key == "synth_width") synth_width = parse_i64(key, value);
  else if (key == "synth_noise") synth_noise = parse_f64(key, value);
  else if (key == "synth_camera_variation") synth_camera_variation = parse_f64(key, value);
  else if (key == "synth_occlusion") synth_occlusion = parse_f64(key, value);
  else if (key == "synth_speed_groups") synth_speed_groups = parse_i64(key, value);
  else if (key == "synth_split") synth_split = value;
  else throw ConfigError("unknown configuration key: '" + key + "'");
}

std::string Config::get(const std::string& key) const {
  if (key == "seed") return std::to_string(seed);
  if (key == "device") return device;
  if (key == "seq_len") return std::to_string(seq_len);
  if (key == "batch_size") return std::to_string(batch_size);
  if (key == "epochs") return std::to_string(epochs);
  if (key == "steps_per_epoch") return std::to_string(steps_per_epoch);
  if (key == "lr") return fmt_f64(lr);
  if (key == "lr_decay_factor") return fmt_f64(lr_decay_factor);
  if (key == "lr_decay_every") return std::to_string(lr_decay_every);
  if (key == "weight_decay") return fmt_f64(weight_decay);
  if (key == "momentum") return fmt_f64(momentum);
  if (key == "nesterov") return fmt_bool(nesterov);
  if (key == "lambda_frame") return fmt_f64(lambda_frame);
  if (key == "lambda_video") return fmt_f64(lambda_video);
  if (key == "lambda_veri") return fmt_f64(lambda_veri);
  if (key == "oim_momentum") return fmt_f64(oim_momentum);
  if (key == "oim_temperature") return fmt_f64(oim_temperature);
  if (key == "image_height") return std::to_string(image_height);
  if (key == "image_width") return std::to_string(image_width);
  if (key == "norm_mean") return fmt_f64(norm_mean);
  if (key == "norm_std") return fmt_f64(norm_std);
  if (key == "backbone_widths") return fmt_i64_list(backbone_widths);
  if (key == "gce") return fmt_bool(gce);
  if (key == "trl") return fmt_bool(trl);
  if (key == "direction") return direction;
  if (key == "enhancement") return fmt_bool(enhancement);
  if (key == "memory") return memory;
  if (key == "tied") return fmt_bool(tied);
  if (key == "pool") return pool;
  if (key == "eval_feature") return eval_feature;
  if (key == "eval_max_rank") return std::to_string(eval_max_rank);
  if (key == "eval_every") return std::to_string(eval_every);
  if (key == "save_every") return std::to_string(save_every);
  if (key == "early_stop_rank1") return fmt_f64(early_stop_rank1);
  if (key == "resume") return resume;
  if (key == "synth_identities") return std::to_string(synth_identities);
  if (key == "synth_cameras") return std::to_string(synth_cameras);
  if (key == "synth_tracklets") return std::to_string(synth_tracklets);
  if (key == "synth_frames") return std::to_string(synth_frames);
  if (key == "synth_height") return std::to_string(synth_height);
  if (key == "synth_width") return std::to_string(synth_width);
  if (key == "synth_noise") return fmt_f64(synth_noise);
  if (key == "synth_camera_variation") return fmt_f64(synth_camera_variation);
  if (key == "synth_occlusion") return fmt_f64(synth_occlusion);
  if (key == "synth_speed_groups") return std::to_string(synth_speed_groups);
  if (key == "synth_split") return synth_split;
  throw ConfigError("unknown configuration key: '" + key + "'");
}

void Config::apply_override(const std::string& kv) {
  const size_t eq = kv.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must have the form key=value, got '" + kv + "'");
  }
  apply(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  Config cfg;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    cfg.apply(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

std::string Config::to_text() const {
  std::ostringstream out;
  for (const std::string& key : keys()) out << key << "=" << get(key) << "\n";
  return out.str();
}

void Config::validate() const {
  if (device != "cpu") throw ConfigError("only device=cpu is supported, got '" + device + "'");
  if (seq_len <= 0) throw ConfigError("seq_len must be positive");
  if (batch_size <= 0 || batch_size % 2 != 0) {
    throw ConfigError("batch_size must be positive and even for pair mining");
  }
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (steps_per_epoch < 0) throw ConfigError("steps_per_epoch must be non-negative");
  if (lr <= 0) throw ConfigError("lr must be positive");
  if (lr_decay_factor <= 0 || lr_decay_factor > 1) {
    throw ConfigError("lr_decay_factor must lie in (0, 1]");
  }
  if (lr_decay_every <= 0) throw ConfigError("lr_decay_every must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
  if (lambda_frame < 0 || lambda_video < 0 || lambda_veri < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (oim_momentum < 0 || oim_momentum > 1) throw ConfigError("oim_momentum must lie in [0, 1]");
  if (oim_temperature <= 0) throw ConfigError("oim_temperature must be positive");
  if (image_height <= 0 || image_width <= 0) throw ConfigError("image size must be positive");
  if (norm_std <= 0) throw ConfigError("norm_std must be positive");
  if (backbone_widths.size() != 4) {
    throw ConfigError("backbone_widths must list exactly four stage widths");
  }
  for (int64_t w : backbone_widths) {
    if (w <= 0) throw ConfigError("backbone widths must be positive");
  }
  if (trl && !gce) {
    throw ConfigError("trl=true requires gce=true: the recurrence consumes the "
                      "disentangled feature pair");
  }
  if (direction != "bi" && direction != "forward" && direction != "backward") {
    throw ConfigError("direction must be bi, forward or backward, got '" + direction + "'");
  }
  if (memory != "residual" && memory != "identity" && memory != "off") {
    throw ConfigError("memory must be residual, identity or off, got '" + memory + "'");
  }
  if (pool != "mean" && pool != "max") {
    throw ConfigError("pool must be mean or max, got '" + pool + "'");
  }
  if (eval_feature != "joint" && eval_feature != "high" && eval_feature != "low") {
    throw ConfigError("eval_feature must be joint, high or low, got '" + eval_feature + "'");
  }
  if (eval_feature != "joint" && !gce) {
    throw ConfigError("eval_feature=" + eval_feature + " needs the two-stream head (gce=true)");
  }
  if (eval_max_rank <= 0) throw ConfigError("eval_max_rank must be positive");
  if (eval_every < 0 || save_every < 0) {
    throw ConfigError("eval_every and save_every must be non-negative");
  }
  if (early_stop_rank1 < 0 || early_stop_rank1 > 1) {
    throw ConfigError("early_stop_rank1 must lie in [0, 1]");
  }
  if (early_stop_rank1 > 0 && eval_every <= 0) {
    throw ConfigError("early_stop_rank1 needs eval_every > 0");
  }
  if (synth_split != "disjoint" && synth_split != "shared") {
    throw ConfigError("synth_split must be disjoint or shared, got '" + synth_split + "'");
  }
  validate_synthetic_spec(synthetic_spec());
}

ModelOptions Config::model_options() const {
  ModelOptions opts;
  opts.backbone_widths = backbone_widths;
  opts.gce = gce;
  opts.trl = trl;
  opts.max_pool = pool == "max";
  if (direction == "forward") opts.trl_opts.direction = Direction::kForward;
  else if (direction == "backward") opts.trl_opts.direction = Direction::kBackward;
  else opts.trl_opts.direction = Direction::kBidirectional;
  opts.trl_opts.enhancement = enhancement;
  if (memory == "identity") opts.trl_opts.memory = MemoryMode::kIdentity;
  else if (memory == "off") opts.trl_opts.memory = MemoryMode::kOff;
  else opts.trl_opts.memory = MemoryMode::kResidual;
  opts.trl_opts.tied_weights = tied;
  return opts;
}

AugmentOptions Config::augment_options() const {
  AugmentOptions opts;
  opts.height = image_height;
  opts.width = image_width;
  opts.mean = {norm_mean, norm_mean, norm_mean};
  opts.std = {norm_std, norm_std, norm_std};
  return opts;
}

SyntheticSpec Config::synthetic_spec() const {
  SyntheticSpec spec;
  spec.identities = synth_identities;
  spec.cameras = synth_cameras;
  spec.tracklets = synth_tracklets;
  spec.frames = synth_frames;
  spec.height = synth_height;
  spec.width = synth_width;
  spec.noise = synth_noise;
  spec.camera_variation = synth_camera_variation;
  spec.occlusion = synth_occlusion;
  spec.speed_groups = synth_speed_groups;
  spec.seed = seed;
  spec.split_mode = synth_split == "shared" ? SyntheticSpec::SplitMode::kShared
                                            : SyntheticSpec::SplitMode::kDisjoint;
  return spec;
}

LossWeights Config::loss_weights() const {
  LossWeights w;
  w.frame = lambda_frame;
  w.video = lambda_video;
  w.verification = lambda_veri;
  return w;
}

}  // namespace grl
