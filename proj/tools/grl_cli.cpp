// Command line frontend. Every subcommand assembles a session from the
// config file plus overrides, runs one library operation and exits with the
// status code (0 = ok, otherwise the grl_status value).

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grl/grl.h"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string seed;
  std::string device;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "config file (key=value lines)")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", args->seed, "override the seed key");
  sub->add_option("--device", args->device, "override the device key");
  sub->add_option("--set", args->sets, "extra key=value override (repeatable)");
}

// Command line beats the config file; --set beats the dedicated flags.
std::vector<std::string> collect_overrides(const CommonArgs& args) {
  std::vector<std::string> overrides;
  if (!args.seed.empty()) overrides.push_back("seed=" + args.seed);
  if (!args.device.empty()) overrides.push_back("device=" + args.device);
  overrides.insert(overrides.end(), args.sets.begin(), args.sets.end());
  return overrides;
}

using SessionPtr = std::unique_ptr<grl_session, void (*)(grl_session*)>;

int open_session(const CommonArgs& args, SessionPtr* out) {
  std::vector<std::string> overrides = collect_overrides(args);
  std::vector<const char*> raw;
  raw.reserve(overrides.size());
  for (const std::string& o : overrides) raw.push_back(o.c_str());
  grl_session* session = nullptr;
  grl_status status = grl_session_create(args.config_path.empty() ? nullptr : args.config_path.c_str(),
                                         raw.data(), static_cast<int32_t>(raw.size()), &session);
  if (status != GRL_OK) {
    std::fprintf(stderr, "error (%s): %s\n", grl_status_name(status), grl_last_error());
    return status;
  }
  *out = SessionPtr(session, grl_session_destroy);
  return GRL_OK;
}

int report(grl_session* session, grl_status status) {
  if (status != GRL_OK) {
    std::fprintf(stderr, "error (%s): %s\n", grl_status_name(status), grl_session_error(session));
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trains and evaluates a video person re-identification model"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string data_root;
  std::string out_dir;
  std::string checkpoint;
  std::string preset = "components";
  int32_t num_seeds = 3;
  bool force = false;
  bool print_config = false;

  CLI::App* generate = app.add_subcommand("generate", "render a synthetic dataset");
  add_common(generate, &common);
  generate->add_option("--out", out_dir, "output dataset directory")->required();
  generate->add_flag("--force", force, "overwrite a non-empty output directory");

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train, &common);
  train->add_option("--data-root", data_root, "dataset directory")->required();
  train->add_option("--out", out_dir, "run directory for logs and checkpoints")->required();
  train->add_flag("--print-config", print_config, "print the effective config before training");

  CLI::App* evaluate = app.add_subcommand("evaluate", "rank the gallery for every query");
  add_common(evaluate, &common);
  evaluate->add_option("--data-root", data_root, "dataset directory")->required();
  evaluate->add_option("--out", out_dir, "directory for report.txt / report.json")->required();
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint to evaluate (default: fresh model)");

  CLI::App* ablate = app.add_subcommand("ablate", "train and score a preset of model variants");
  add_common(ablate, &common);
  ablate->add_option("--data-root", data_root, "dataset directory")->required();
  ablate->add_option("--out", out_dir, "directory for per-row runs and ablation.csv")->required();
  ablate->add_option("--preset", preset, "components | emu | length | direction | losses");
  ablate->add_option("--seeds", num_seeds, "number of consecutive seeds per row")
      ->check(CLI::PositiveNumber);

  CLI::App* heatmaps = app.add_subcommand("heatmaps", "export correlation and memory maps");
  add_common(heatmaps, &common);
  heatmaps->add_option("--data-root", data_root, "dataset directory")->required();
  heatmaps->add_option("--out", out_dir, "directory for the rendered maps")->required();
  heatmaps->add_option("--checkpoint", checkpoint, "checkpoint to visualize (default: fresh model)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage mistakes land in the config category; --help stays a success.
    return app.exit(e) == 0 ? 0 : GRL_ERR_CONFIG;
  }

  SessionPtr session(nullptr, grl_session_destroy);
  if (int status = open_session(common, &session); status != GRL_OK) return status;

  if (generate->parsed()) {
    int status = report(session.get(), grl_session_generate(session.get(), out_dir.c_str(),
                                                            force ? 1 : 0));
    if (status == GRL_OK) std::printf("dataset written to %s\n", out_dir.c_str());
    return status;
  }
  if (train->parsed()) {
    if (print_config) std::fputs(grl_session_config_text(session.get()), stdout);
    int status = report(session.get(),
                        grl_session_train(session.get(), data_root.c_str(), out_dir.c_str()));
    if (status == GRL_OK) std::printf("run artifacts in %s\n", out_dir.c_str());
    return status;
  }
  if (evaluate->parsed()) {
    double map = 0.0;
    double rank1 = 0.0;
    int status = report(session.get(), grl_session_evaluate(
                                           session.get(), data_root.c_str(),
                                           checkpoint.empty() ? nullptr : checkpoint.c_str(),
                                           out_dir.c_str(), &map, &rank1));
    if (status == GRL_OK) std::printf("rank1 %.6f map %.6f (report in %s)\n", rank1, map, out_dir.c_str());
    return status;
  }
  if (ablate->parsed()) {
    int status = report(session.get(), grl_session_ablate(session.get(), preset.c_str(),
                                                          data_root.c_str(), out_dir.c_str(),
                                                          num_seeds));
    if (status == GRL_OK) std::printf("ablation results in %s\n", out_dir.c_str());
    return status;
  }
  if (heatmaps->parsed()) {
    int status = report(session.get(), grl_session_heatmaps(
                                           session.get(), data_root.c_str(),
                                           checkpoint.empty() ? nullptr : checkpoint.c_str(),
                                           out_dir.c_str()));
    if (status == GRL_OK) std::printf("maps written to %s\n", out_dir.c_str());
    return status;
  }
  return GRL_ERR_INTERNAL;  // unreachable: a subcommand is required
}
