#pragma once

#include <string>
#include <vector>

#include "data/dataset.hpp"
#include "harness/config.hpp"

namespace grl {

struct AblationRow {
  std::string name;
  Config config;
};

// Known presets: components (baseline / correlation head / full model),
// emu (full / memory off / enhancement off), length (sequence lengths
// 4,6,8,10), direction (forward / backward / bi) and losses (video table /
// frame table / both). Every row copies the base config and changes only
// the preset's declared fields.
std::vector<AblationRow> ablation_preset(const std::string& preset, const Config& base);

// The config keys a preset is allowed to vary, for auditing the rows.
const std::vector<std::string>& ablation_fields(const std::string& preset);

struct AblationCell {
  std::string row;
  uint64_t seed = 0;
  double rank1 = 0.0;
  double map = 0.0;
};

struct AblationReport {
  std::string preset;
  std::vector<std::string> row_names;
  std::vector<AblationCell> cells;   // row-major over (row, seed)
  std::vector<double> mean_rank1;    // per row, averaged over seeds
  std::vector<double> mean_map;
};

// Trains and evaluates every row under seeds base.seed .. base.seed+n-1
// (the same seed set for every row) and averages the metrics per row.
// Artifacts land under out_dir/<row>/seed<k>/.
AblationReport run_ablation(const Config& base, const std::string& preset,
                            const TrackletIndex& index, const std::string& out_dir,
                            int64_t num_seeds);

// Writes ablation.csv and ablation.json under out_dir.
void write_ablation_report(const std::string& out_dir, const AblationReport& report);

}  // namespace grl
