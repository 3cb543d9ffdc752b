#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "core/errors.hpp"
#include "data/image_io.hpp"
#include "data/synthetic.hpp"
#include "harness/ablate.hpp"
#include "harness/checkpoint.hpp"
#include "harness/evaluate.hpp"
#include "harness/heatmaps.hpp"
#include "harness/session.hpp"
#include "harness/trainer.hpp"
#include "testutil.hpp"

using namespace grl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("grl_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Small shared-split dataset: every identity trains on tracklet 0 and is
// evaluated cross-camera on tracklet 1.
const TrackletIndex& mini_dataset() {
  static const TrackletIndex index = [] {
    SyntheticSpec spec;
    spec.identities = 4;
    spec.cameras = 2;
    spec.tracklets = 2;
    spec.frames = 6;
    spec.height = 16;
    spec.width = 8;
    spec.seed = 5;
    spec.split_mode = SyntheticSpec::SplitMode::kShared;
    return generate_synthetic_dataset(spec, (fs::temp_directory_path() / "grl_mini_ds").string(),
                                      true);
  }();
  return index;
}

Config mini_config() {
  Config cfg;
  cfg.seed = 1;
  cfg.seq_len = 2;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.steps_per_epoch = 2;
  cfg.image_height = 16;
  cfg.image_width = 8;
  cfg.backbone_widths = {4, 4, 8, 8};
  cfg.eval_max_rank = 4;
  return cfg;
}

bool state_equal(const CheckpointData& a, const CheckpointData& b) {
  if (a.arrays.size() != b.arrays.size()) return false;
  for (size_t i = 0; i < a.arrays.size(); ++i) {
    if (a.arrays[i].name != b.arrays[i].name) return false;
    if (a.arrays[i].shape != b.arrays[i].shape) return false;
    if (a.arrays[i].values != b.arrays[i].values) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("checkpoints survive a save/load/save round trip byte for byte") {
  CheckpointData data;
  data.put_string("config", "lr=0.001\n");
  data.put_string("rng/train", "12 34 56");
  data.put_int("epochs_completed", 7);
  Rng rng(3);
  std::vector<double> values(60);
  for (double& v : values) v = rng.normal();
  data.put_array("param/a", {3, 4, 5}, values);
  data.put_array("param/b", {60}, values);

  const fs::path dir = fresh_dir("ckpt");
  const std::string p1 = (dir / "a.ckpt").string();
  const std::string p2 = (dir / "b.ckpt").string();
  save_checkpoint(p1, data);
  const CheckpointData loaded = load_checkpoint(p1);
  save_checkpoint(p2, loaded);
  CHECK(file_bytes(p1) == file_bytes(p2));

  CHECK(loaded.get_string("config") == "lr=0.001\n");
  CHECK(loaded.get_int("epochs_completed") == 7);
  CHECK(loaded.get_array("param/a").shape == Shape{3, 4, 5});
  CHECK(loaded.get_array("param/a").values == values);
  CHECK(loaded.find_array("param/zzz") == nullptr);
  CHECK_THROWS_AS(loaded.get_array("param/zzz"), IoError);

  // Corruption and absence are I/O failures.
  std::ofstream bad(dir / "bad.ckpt", std::ios::binary);
  bad << "NOTACKPT and then some";
  bad.close();
  CHECK_THROWS_AS(load_checkpoint((dir / "bad.ckpt").string()), IoError);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("training runs, logs and checkpoints") {
  const fs::path dir = fresh_dir("train_smoke");
  Trainer trainer(mini_config(), mini_dataset(), dir.string());
  const TrainResult result = trainer.run();
  CHECK(result.epochs_completed == 2);
  CHECK(std::isfinite(result.final_loss));
  CHECK(fs::exists(dir / "last.ckpt"));
  CHECK(fs::exists(dir / "train.log"));
  CHECK(fs::exists(dir / "epoch_losses.csv"));

  const CheckpointData ckpt = load_checkpoint((dir / "last.ckpt").string());
  CHECK(Session::stored_epochs(ckpt) == 2);
  CHECK(ckpt.get_int("train_identities") == 4);
  CHECK(ckpt.find_array("oim/video") != nullptr);
  CHECK(ckpt.find_array("oim/frame") != nullptr);

  // Two epochs in the csv, header first, decayed lr echoed per row.
  std::ifstream csv(dir / "epoch_losses.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "epoch,loss,frame,video,veri,lr");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 2);
  fs::remove_all(dir);
}

TEST_CASE("learning rate decays by the configured factor and interval") {
  const fs::path dir = fresh_dir("lr_decay");
  Config cfg = mini_config();
  cfg.epochs = 3;
  cfg.steps_per_epoch = 1;
  cfg.lr = 0.5;
  cfg.lr_decay_factor = 0.5;
  cfg.lr_decay_every = 1;
  Trainer trainer(cfg, mini_dataset(), dir.string());
  trainer.run();
  std::ifstream csv(dir / "epoch_losses.csv");
  std::string line;
  std::getline(csv, line);  // header
  std::vector<double> lrs;
  while (std::getline(csv, line)) {
    lrs.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  REQUIRE(lrs.size() == 3);
  CHECK(lrs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lrs[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(lrs[2] == doctest::Approx(0.125).epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("identical seeds reproduce the loss log, different seeds do not") {
  const fs::path dir_a = fresh_dir("det_a");
  const fs::path dir_b = fresh_dir("det_b");
  const fs::path dir_c = fresh_dir("det_c");
  const Config cfg = mini_config();
  Trainer(cfg, mini_dataset(), dir_a.string()).run();
  Trainer(cfg, mini_dataset(), dir_b.string()).run();
  CHECK(file_bytes(dir_a / "epoch_losses.csv") == file_bytes(dir_b / "epoch_losses.csv"));

  Config other = cfg;
  other.seed = cfg.seed + 1;
  Trainer(other, mini_dataset(), dir_c.string()).run();
  CHECK(file_bytes(dir_a / "epoch_losses.csv") != file_bytes(dir_c / "epoch_losses.csv"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::remove_all(dir_c);
}

TEST_CASE("resuming from a checkpoint matches the uninterrupted run") {
  const fs::path dir_full = fresh_dir("resume_full");
  const fs::path dir_part = fresh_dir("resume_part");
  const Config cfg = mini_config();  // 2 epochs
  Trainer(cfg, mini_dataset(), dir_full.string()).run();

  Config first_half = cfg;
  first_half.epochs = 1;
  Trainer(first_half, mini_dataset(), dir_part.string()).run();
  Config second_half = cfg;
  second_half.resume = (dir_part / "last.ckpt").string();
  const TrainResult resumed = Trainer(second_half, mini_dataset(), dir_part.string()).run();
  CHECK(resumed.epochs_completed == 2);

  const CheckpointData full = load_checkpoint((dir_full / "last.ckpt").string());
  const CheckpointData part = load_checkpoint((dir_part / "last.ckpt").string());
  CHECK(Session::stored_epochs(part) == 2);
  CHECK(state_equal(full, part));  // parameters, momentum and tables bitwise

  // The per-epoch loss rows agree as well.
  CHECK(file_bytes(dir_full / "epoch_losses.csv") == file_bytes(dir_part / "epoch_losses.csv"));
  fs::remove_all(dir_full);
  fs::remove_all(dir_part);
}

TEST_CASE("a non-finite loss aborts and keeps the previous checkpoint") {
  const fs::path dir = fresh_dir("abort");
  Config cfg = mini_config();
  cfg.lr = 1e155;  // one step is enough to overflow the activations
  cfg.epochs = 3;
  Trainer trainer(cfg, mini_dataset(), dir.string());
  CHECK_THROWS_AS(trainer.run(), NumericError);
  REQUIRE(fs::exists(dir / "last.ckpt"));
  const CheckpointData kept = load_checkpoint((dir / "last.ckpt").string());
  CHECK(Session::stored_epochs(kept) < 3);
  for (const auto& a : kept.arrays) {
    for (double v : a.values) REQUIRE(std::isfinite(v));
  }
  fs::remove_all(dir);
}

TEST_CASE("an untrained model still evaluates to finite metrics") {
  Session session(mini_config(), 4);
  const EvalOutput out = evaluate_model(session.model(), mini_dataset(), mini_config());
  CHECK(out.num_queries == 4);
  CHECK(out.num_gallery == 4);
  CHECK(std::isfinite(out.result.map));
  for (double v : out.result.cmc) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(out.embedding_dim == 16);  // joint = both streams
}

TEST_CASE("evaluation can rank each feature of the two-stream embedding") {
  Session session(mini_config(), 4);
  for (const auto& [feature, dim] :
       std::vector<std::pair<std::string, int64_t>>{{"joint", 16}, {"high", 8}, {"low", 8}}) {
    Config cfg = mini_config();
    cfg.eval_feature = feature;
    const EvalOutput out = evaluate_model(session.model(), mini_dataset(), cfg);
    CHECK(out.embedding_dim == dim);
    CHECK(std::isfinite(out.result.map));
  }
}

TEST_CASE("evaluation reports are written in both formats") {
  const fs::path dir = fresh_dir("report");
  Session session(mini_config(), 4);
  const EvalOutput out = evaluate_model(session.model(), mini_dataset(), mini_config());
  write_eval_report(dir.string(), out, mini_config());
  CHECK(fs::exists(dir / "report.txt"));
  const std::string text = file_bytes(dir / "report.txt");
  CHECK(text.find("map ") != std::string::npos);
  CHECK(text.find("rank1 ") != std::string::npos);

  nlohmann::json j = nlohmann::json::parse(file_bytes(dir / "report.json"));
  CHECK(j["map"].is_number());
  CHECK(j["cmc"].is_array());
  CHECK(j["queries_evaluated"].get<int64_t>() == out.result.queries_evaluated);
  fs::remove_all(dir);
}

TEST_CASE("a trained checkpoint evaluates identically to the live model") {
  const fs::path dir = fresh_dir("eval_ckpt");
  Config cfg = mini_config();
  cfg.epochs = 1;
  Trainer trainer(cfg, mini_dataset(), dir.string());
  trainer.run();
  const EvalOutput live = evaluate_model(trainer.session().model(), mini_dataset(), cfg);
  const EvalOutput loaded =
      evaluate_checkpoint(cfg, (dir / "last.ckpt").string(), mini_dataset());
  CHECK(live.result.map == loaded.result.map);
  REQUIRE(live.result.cmc.size() == loaded.result.cmc.size());
  for (size_t k = 0; k < live.result.cmc.size(); ++k) {
    CHECK(live.result.cmc[k] == loaded.result.cmc[k]);
  }
  fs::remove_all(dir);
}

TEST_CASE("session restore rejects a mismatched configuration") {
  const fs::path dir = fresh_dir("restore_mismatch");
  Config cfg = mini_config();
  cfg.epochs = 0;
  Trainer trainer(cfg, mini_dataset(), dir.string());
  trainer.run();
  Config other = cfg;
  other.backbone_widths = {8, 8, 8, 8};
  CHECK_THROWS_AS(evaluate_checkpoint(other, (dir / "last.ckpt").string(), mini_dataset()),
                  ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("ablation presets vary only their declared fields") {
  const Config base = mini_config();
  for (const std::string& preset : {"components", "emu", "length", "direction", "losses"}) {
    const auto rows = ablation_preset(preset, base);
    CHECK(rows.size() >= 3);
    const auto& allowed = ablation_fields(preset);
    const std::set<std::string> allowed_set(allowed.begin(), allowed.end());
    for (const AblationRow& row : rows) {
      for (const std::string& key : Config::keys()) {
        if (allowed_set.count(key)) continue;
        CHECK(row.config.get(key) == base.get(key));
      }
    }
  }
  CHECK_THROWS_AS(ablation_preset("nonsense", base), ConfigError);

  const auto length_rows = ablation_preset("length", base);
  REQUIRE(length_rows.size() == 4);
  CHECK(length_rows[0].config.seq_len == 4);
  CHECK(length_rows[1].config.seq_len == 6);
  CHECK(length_rows[2].config.seq_len == 8);
  CHECK(length_rows[3].config.seq_len == 10);

  const auto comp_rows = ablation_preset("components", base);
  CHECK_FALSE(comp_rows[0].config.gce);
  CHECK_FALSE(comp_rows[0].config.trl);
  CHECK(comp_rows[1].config.gce);
  CHECK_FALSE(comp_rows[1].config.trl);
  CHECK(comp_rows[2].config.trl);

  Config no_trl = base;
  no_trl.trl = false;
  CHECK_THROWS_AS(ablation_preset("emu", no_trl), ConfigError);
}

TEST_CASE("the ablation runner trains every row and writes reports") {
  const fs::path dir = fresh_dir("ablate_run");
  Config base = mini_config();
  base.epochs = 1;
  base.steps_per_epoch = 1;
  const AblationReport report =
      run_ablation(base, "components", mini_dataset(), dir.string(), 1);
  CHECK(report.row_names == std::vector<std::string>{"baseline", "gce", "gce_trl"});
  CHECK(report.cells.size() == 3);
  for (double v : report.mean_map) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(fs::exists(dir / "ablation.csv"));
  CHECK(fs::exists(dir / "ablation.json"));
  CHECK(fs::exists(dir / "baseline" / "seed0" / "last.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("heatmap export writes frames plus three maps per step") {
  const fs::path dir = fresh_dir("heatmaps");
  const Config cfg = mini_config();
  Session session(cfg, 4);
  const HeatmapSummary summary =
      export_heatmaps(session.model(), mini_dataset(), cfg, dir.string());
  CHECK(summary.frames_written == 2);
  CHECK(summary.maps_written == 6);  // correlation + both memory directions
  for (int64_t t = 0; t < 2; ++t) {
    const std::string n = t < 10 ? "0" + std::to_string(t) : std::to_string(t);
    CHECK(fs::exists(dir / ("frame_" + n + ".png")));
    CHECK(fs::exists(dir / ("corr_" + n + ".png")));
    CHECK(fs::exists(dir / ("mem_fwd_" + n + ".png")));
    CHECK(fs::exists(dir / ("mem_bwd_" + n + ".png")));
  }
  fs::remove_all(dir);
}

TEST_CASE("a neutral correlation head exports mid-gray maps") {
  const fs::path dir = fresh_dir("heatmaps_gray");
  const Config cfg = mini_config();
  Session session(cfg, 4);
  testutil::fill(testutil::find_param(session.model(), "gce/conv2/weight"), 0.0);
  testutil::fill(testutil::find_param(session.model(), "gce/conv2/bias"), 0.0);
  export_heatmaps(session.model(), mini_dataset(), cfg, dir.string());
  Tensor img = load_image_native((dir / "corr_00.png").string());
  for (double v : img.values()) {
    CHECK(v == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
  }
  fs::remove_all(dir);
}

TEST_CASE("heatmap export requires the correlation branch") {
  const fs::path dir = fresh_dir("heatmaps_reject");
  Config cfg = mini_config();
  cfg.gce = false;
  cfg.trl = false;
  Session session(cfg, 4);
  CHECK_THROWS_AS(export_heatmaps(session.model(), mini_dataset(), cfg, dir.string()),
                  ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("a single-direction recurrence exports one memory trace") {
  const fs::path dir = fresh_dir("heatmaps_fwd");
  Config cfg = mini_config();
  cfg.direction = "forward";
  Session session(cfg, 4);
  const HeatmapSummary summary =
      export_heatmaps(session.model(), mini_dataset(), cfg, dir.string());
  CHECK(summary.maps_written == 4);  // correlation + forward memory only
  CHECK(fs::exists(dir / "mem_fwd_00.png"));
  CHECK_FALSE(fs::exists(dir / "mem_bwd_00.png"));
  fs::remove_all(dir);
}
