#include "harness/session.hpp"

#include <sstream>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace grl {

namespace {

constexpr uint64_t kInitStream = 0x696e6974ULL;  // model initialization

void copy_into(const CheckpointData& data, const std::string& name, Tensor target) {
  const CheckpointData::Array& a = data.get_array(name);
  check_shape(a.shape == target.shape(),
              "checkpoint entry '" + name + "' has shape " + shape_str(a.shape) +
                  ", model expects " + shape_str(target.shape()));
  std::copy(a.values.begin(), a.values.end(), target.data());
}

// Keys that cannot influence the weights, tables or random streams a
// checkpoint stores: the resume path itself, the epoch budget (resuming may
// extend a finished run), and the reporting knobs. Everything else shapes
// the model, the data stream or the schedule and must match, otherwise the
// continuation could not reproduce an uninterrupted run.
bool state_neutral(const std::string& key) {
  return key == "resume" || key == "epochs" || key == "eval_feature" ||
         key == "eval_max_rank" || key == "eval_every" || key == "save_every" ||
         key == "early_stop_rank1";
}

void check_config_matches(const Config& ours, const std::string& stored_text) {
  std::istringstream in(stored_text);
  Config stored;
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (line.empty() || eq == std::string::npos) continue;
    stored.apply(line.substr(0, eq), line.substr(eq + 1));
  }
  for (const std::string& key : Config::keys()) {
    if (state_neutral(key)) continue;
    if (ours.get(key) != stored.get(key)) {
      throw ConfigError("checkpoint was trained with " + key + "=" + stored.get(key) +
                        " but the current config has " + key + "=" + ours.get(key));
    }
  }
}

}  // namespace

Session::Session(const Config& cfg, int64_t train_identities)
    : cfg_(cfg), train_identities_(train_identities) {
  cfg_.validate();
  if (train_identities <= 0) {
    throw DataError("cannot build identity tables without training identities");
  }
  Rng init_rng(mix64(cfg_.seed, kInitStream));
  model_ = std::make_unique<GrlModel>(init_rng, cfg_.model_options());
  const int64_t dim = model_->feature_channels();
  if (cfg_.gce) {
    oim_frame_ = std::make_unique<OimTable>(train_identities, dim, cfg_.oim_momentum,
                                            cfg_.oim_temperature);
  }
  oim_video_ =
      std::make_unique<OimTable>(train_identities, dim, cfg_.oim_momentum, cfg_.oim_temperature);
}

CheckpointData Session::snapshot(int64_t epochs_completed, const SgdOptimizer* opt,
                                 const std::string& rng_state) const {
  CheckpointData data;
  data.put_string("config", cfg_.to_text());
  data.put_string("rng/train", rng_state);
  data.put_int("epochs_completed", epochs_completed);
  data.put_int("train_identities", train_identities_);
  for (const NamedTensor& p : model_->named_parameters()) {
    data.put_array("param/" + p.name, p.tensor.shape(), p.tensor.values());
  }
  for (const NamedTensor& b : model_->named_buffers()) {
    data.put_array("buffer/" + b.name, b.tensor.shape(), b.tensor.values());
  }
  if (opt) {
    const auto& buffers = const_cast<SgdOptimizer*>(opt)->momentum_buffers();
    for (size_t i = 0; i < buffers.size(); ++i) {
      data.put_array("momentum/" + std::to_string(i),
                     {static_cast<int64_t>(buffers[i].size())}, buffers[i]);
    }
  }
  if (oim_frame_) {
    data.put_array("oim/frame", oim_frame_->entries().shape(), oim_frame_->entries().values());
  }
  data.put_array("oim/video", oim_video_->entries().shape(), oim_video_->entries().values());
  return data;
}

void Session::restore(const CheckpointData& data, SgdOptimizer* opt) {
  check_config_matches(cfg_, data.get_string("config"));
  if (data.get_int("train_identities") != train_identities_) {
    throw ConfigError("checkpoint holds tables for " +
                      std::to_string(data.get_int("train_identities")) +
                      " identities, dataset has " + std::to_string(train_identities_));
  }
  for (const NamedTensor& p : model_->named_parameters()) {
    copy_into(data, "param/" + p.name, p.tensor);
  }
  for (const NamedTensor& b : model_->named_buffers()) {
    copy_into(data, "buffer/" + b.name, b.tensor);
  }
  if (opt) {
    auto& buffers = opt->momentum_buffers();
    for (size_t i = 0; i < buffers.size(); ++i) {
      const CheckpointData::Array& a = data.get_array("momentum/" + std::to_string(i));
      check_shape(a.values.size() == buffers[i].size(),
                  "momentum buffer " + std::to_string(i) + " size mismatch");
      buffers[i] = a.values;
    }
  }
  if (oim_frame_) copy_into(data, "oim/frame", oim_frame_->entries());
  copy_into(data, "oim/video", oim_video_->entries());
}

int64_t Session::stored_epochs(const CheckpointData& data) {
  return data.get_int("epochs_completed");
}

}  // namespace grl
