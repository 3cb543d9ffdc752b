#include "harness/ablate.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "harness/evaluate.hpp"
#include "harness/trainer.hpp"

namespace fs = std::filesystem;

namespace grl {

const std::vector<std::string>& ablation_fields(const std::string& preset) {
  static const std::vector<std::string> components = {"gce", "trl", "eval_feature"};
  static const std::vector<std::string> emu = {"memory", "enhancement"};
  static const std::vector<std::string> length = {"seq_len"};
  static const std::vector<std::string> direction = {"direction"};
  static const std::vector<std::string> losses = {"lambda_frame", "lambda_video"};
  if (preset == "components") return components;
  if (preset == "emu") return emu;
  if (preset == "length") return length;
  if (preset == "direction") return direction;
  if (preset == "losses") return losses;
  throw ConfigError("unknown ablation preset: '" + preset +
                    "' (components, emu, length, direction, losses)");
}

std::vector<AblationRow> ablation_preset(const std::string& preset, const Config& base) {
  ablation_fields(preset);  // validates the name
  base.validate();
  std::vector<AblationRow> rows;
  if (preset == "components") {
    Config baseline = base;
    baseline.gce = false;
    baseline.trl = false;
    baseline.eval_feature = "joint";  // single-stream models have no split feature
    rows.push_back({"baseline", baseline});
    Config gce_only = base;
    gce_only.gce = true;
    gce_only.trl = false;
    rows.push_back({"gce", gce_only});
    Config full = base;
    full.gce = true;
    full.trl = true;
    rows.push_back({"gce_trl", full});
  } else if (preset == "emu") {
    if (!base.trl) throw ConfigError("the emu preset needs trl=true in the base config");
    rows.push_back({"full", base});
    Config no_memory = base;
    no_memory.memory = "off";
    rows.push_back({"no_memory", no_memory});
    Config no_enh = base;
    no_enh.enhancement = false;
    rows.push_back({"no_enhancement", no_enh});
  } else if (preset == "length") {
    for (int64_t t : {4, 6, 8, 10}) {
      Config cfg = base;
      cfg.seq_len = t;
      rows.push_back({"t" + std::to_string(t), cfg});
    }
  } else if (preset == "direction") {
    if (!base.trl) throw ConfigError("the direction preset needs trl=true in the base config");
    for (const std::string& dir : {"forward", "backward", "bi"}) {
      Config cfg = base;
      cfg.direction = dir;
      rows.push_back({dir, cfg});
    }
  } else {  // losses
    Config video_only = base;
    video_only.lambda_frame = 0.0;
    rows.push_back({"video_oim", video_only});
    Config frame_only = base;
    frame_only.lambda_video = 0.0;
    rows.push_back({"frame_oim", frame_only});
    rows.push_back({"video_frame_oim", base});
  }
  for (const AblationRow& row : rows) row.config.validate();
  return rows;
}

AblationReport run_ablation(const Config& base, const std::string& preset,
                            const TrackletIndex& index, const std::string& out_dir,
                            int64_t num_seeds) {
  if (num_seeds <= 0) throw ConfigError("ablation needs at least one seed");
  const std::vector<AblationRow> rows = ablation_preset(preset, base);

  AblationReport report;
  report.preset = preset;
  for (const AblationRow& row : rows) {
    report.row_names.push_back(row.name);
    double sum_rank1 = 0, sum_map = 0;
    for (int64_t k = 0; k < num_seeds; ++k) {
      Config cfg = row.config;
      cfg.seed = base.seed + static_cast<uint64_t>(k);
      const std::string run_dir =
          (fs::path(out_dir) / row.name / ("seed" + std::to_string(k))).string();
      Trainer trainer(cfg, index, run_dir);
      trainer.run();
      const EvalOutput eval = evaluate_model(trainer.session().model(), index, cfg);
      AblationCell cell;
      cell.row = row.name;
      cell.seed = cfg.seed;
      cell.rank1 = eval.result.cmc.empty() ? 0.0 : eval.result.cmc[0];
      cell.map = eval.result.map;
      report.cells.push_back(cell);
      sum_rank1 += cell.rank1;
      sum_map += cell.map;
    }
    report.mean_rank1.push_back(sum_rank1 / static_cast<double>(num_seeds));
    report.mean_map.push_back(sum_map / static_cast<double>(num_seeds));
  }
  write_ablation_report(out_dir, report);
  return report;
}

void write_ablation_report(const std::string& out_dir, const AblationReport& report) {
  fs::create_directories(out_dir);
  {
    std::ofstream csv(fs::path(out_dir) / "ablation.csv");
    if (!csv) throw IoError("cannot write ablation report under " + out_dir);
    csv.precision(10);
    csv << "preset,row,seed,rank1,map\n";
    for (const AblationCell& cell : report.cells) {
      csv << report.preset << ',' << cell.row << ',' << cell.seed << ',' << cell.rank1 << ','
          << cell.map << "\n";
    }
    for (size_t r = 0; r < report.row_names.size(); ++r) {
      csv << report.preset << ',' << report.row_names[r] << ",mean," << report.mean_rank1[r]
          << ',' << report.mean_map[r] << "\n";
    }
  }
  nlohmann::json j;
  j["preset"] = report.preset;
  j["rows"] = report.row_names;
  j["mean_rank1"] = report.mean_rank1;
  j["mean_map"] = report.mean_map;
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const AblationCell& cell : report.cells) {
    cells.push_back({{"row", cell.row},
                     {"seed", cell.seed},
                     {"rank1", cell.rank1},
                     {"map", cell.map}});
  }
  std::ofstream js(fs::path(out_dir) / "ablation.json");
  if (!js) throw IoError("cannot write ablation report under " + out_dir);
  js << j.dump(2) << "\n";
}

}  // namespace grl
