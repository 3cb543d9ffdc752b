#include "grl/grl.h"

#include <cstdint>
#include <exception>
#include <string>
#include <utility>

#include "core/errors.hpp"
#include "core/shape.hpp"
#include "data/dataset.hpp"
#include "data/synthetic.hpp"
#include "harness/ablate.hpp"
#include "harness/config.hpp"
#include "harness/evaluate.hpp"
#include "harness/heatmaps.hpp"
#include "harness/session.hpp"
#include "harness/trainer.hpp"

struct grl_session {
  grl::Config cfg;
  std::string error;
  std::string config_text;  // backing store for grl_session_config_text
};

namespace {

thread_local std::string g_last_error;

// Runs fn, translating the exception families into status codes and stashing
// the message into sink.
template <typename Fn>
grl_status guarded(std::string& sink, Fn&& fn) {
  try {
    fn();
    sink.clear();
    return GRL_OK;
  } catch (const grl::ConfigError& e) {
    sink = e.what();
    return GRL_ERR_CONFIG;
  } catch (const grl::DataError& e) {
    sink = e.what();
    return GRL_ERR_DATA;
  } catch (const grl::NumericError& e) {
    sink = e.what();
    return GRL_ERR_NUMERIC;
  } catch (const grl::IoError& e) {
    sink = e.what();
    return GRL_ERR_IO;
  } catch (const grl::ShapeError& e) {
    sink = e.what();
    return GRL_ERR_INVALID;
  } catch (const std::exception& e) {
    sink = e.what();
    return GRL_ERR_INTERNAL;
  } catch (...) {
    sink = "unknown error";
    return GRL_ERR_INTERNAL;
  }
}

grl_status require(bool ok, std::string& sink, const char* msg) {
  if (ok) return GRL_OK;
  sink = msg;
  return GRL_ERR_INVALID;
}

}  // namespace

extern "C" {

const char* grl_status_name(grl_status status) {
  switch (status) {
    case GRL_OK: return "ok";
    case GRL_ERR_CONFIG: return "config";
    case GRL_ERR_DATA: return "data";
    case GRL_ERR_NUMERIC: return "numeric";
    case GRL_ERR_IO: return "io";
    case GRL_ERR_INVALID: return "invalid";
    case GRL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* grl_last_error(void) { return g_last_error.c_str(); }

grl_status grl_session_create(const char* config_path, const char* const* overrides,
                              int32_t n_overrides, grl_session** out) {
  if (grl_status s = require(out != nullptr, g_last_error, "out is null"); s != GRL_OK) return s;
  *out = nullptr;
  if (grl_status s = require(n_overrides == 0 || overrides != nullptr, g_last_error,
                             "overrides is null but n_overrides > 0");
      s != GRL_OK) {
    return s;
  }
  grl::Config cfg;
  grl_status status = guarded(g_last_error, [&] {
    if (config_path != nullptr) cfg = grl::Config::from_file(config_path);
    for (int32_t i = 0; i < n_overrides; ++i) {
      if (overrides[i] == nullptr) throw grl::ConfigError("override " + std::to_string(i) + " is null");
      cfg.apply_override(overrides[i]);
    }
    cfg.validate();
  });
  if (status != GRL_OK) return status;
  *out = new grl_session{std::move(cfg), {}, {}};
  return GRL_OK;
}

void grl_session_destroy(grl_session* session) { delete session; }

const char* grl_session_error(const grl_session* session) {
  if (session == nullptr) return "session is null";
  return session->error.c_str();
}

const char* grl_session_config_text(grl_session* session) {
  if (session == nullptr) return "";
  session->config_text = session->cfg.to_text();
  return session->config_text.c_str();
}

grl_status grl_session_generate(grl_session* session, const char* out_dir, int32_t force) {
  if (session == nullptr) { g_last_error = "session is null"; return GRL_ERR_INVALID; }
  if (grl_status s = require(out_dir != nullptr, session->error, "out_dir is null"); s != GRL_OK) return s;
  return guarded(session->error, [&] {
    grl::generate_synthetic_dataset(session->cfg.synthetic_spec(), out_dir, force != 0);
  });
}

grl_status grl_session_train(grl_session* session, const char* data_root, const char* out_dir) {
  if (session == nullptr) { g_last_error = "session is null"; return GRL_ERR_INVALID; }
  if (grl_status s = require(data_root != nullptr, session->error, "data_root is null"); s != GRL_OK) return s;
  if (grl_status s = require(out_dir != nullptr, session->error, "out_dir is null"); s != GRL_OK) return s;
  return guarded(session->error, [&] {
    grl::TrackletIndex index = grl::load_dataset_index(data_root);
    grl::Trainer trainer(session->cfg, index, out_dir);
    trainer.run();
  });
}

grl_status grl_session_evaluate(grl_session* session, const char* data_root,
                                const char* checkpoint_path, const char* out_dir,
                                double* map_out, double* rank1_out) {
  if (session == nullptr) { g_last_error = "session is null"; return GRL_ERR_INVALID; }
  if (grl_status s = require(data_root != nullptr, session->error, "data_root is null"); s != GRL_OK) return s;
  if (grl_status s = require(out_dir != nullptr, session->error, "out_dir is null"); s != GRL_OK) return s;
  return guarded(session->error, [&] {
    grl::TrackletIndex index = grl::load_dataset_index(data_root);
    grl::EvalOutput out;
    if (checkpoint_path != nullptr) {
      out = grl::evaluate_checkpoint(session->cfg, checkpoint_path, index);
    } else {
      grl::Session live(session->cfg, static_cast<int64_t>(index.train_identities.size()));
      out = grl::evaluate_model(live.model(), index, session->cfg);
    }
    grl::write_eval_report(out_dir, out, session->cfg);
    if (map_out != nullptr) *map_out = out.result.map;
    if (rank1_out != nullptr) *rank1_out = out.result.cmc.empty() ? 0.0 : out.result.cmc[0];
  });
}

grl_status grl_session_ablate(grl_session* session, const char* preset, const char* data_root,
                              const char* out_dir, int32_t num_seeds) {
  if (session == nullptr) { g_last_error = "session is null"; return GRL_ERR_INVALID; }
  if (grl_status s = require(preset != nullptr, session->error, "preset is null"); s != GRL_OK) return s;
  if (grl_status s = require(data_root != nullptr, session->error, "data_root is null"); s != GRL_OK) return s;
  if (grl_status s = require(out_dir != nullptr, session->error, "out_dir is null"); s != GRL_OK) return s;
  return guarded(session->error, [&] {
    grl::TrackletIndex index = grl::load_dataset_index(data_root);
    grl::AblationReport report =
        grl::run_ablation(session->cfg, preset, index, out_dir, num_seeds);
    grl::write_ablation_report(out_dir, report);
  });
}

grl_status grl_session_heatmaps(grl_session* session, const char* data_root,
                                const char* checkpoint_path, const char* out_dir) {
  if (session == nullptr) { g_last_error = "session is null"; return GRL_ERR_INVALID; }
  if (grl_status s = require(data_root != nullptr, session->error, "data_root is null"); s != GRL_OK) return s;
  if (grl_status s = require(out_dir != nullptr, session->error, "out_dir is null"); s != GRL_OK) return s;
  return guarded(session->error, [&] {
    grl::TrackletIndex index = grl::load_dataset_index(data_root);
    if (checkpoint_path != nullptr) {
      grl::export_heatmaps_checkpoint(session->cfg, checkpoint_path, index, out_dir);
    } else {
      grl::Session live(session->cfg, static_cast<int64_t>(index.train_identities.size()));
      grl::export_heatmaps(live.model(), index, session->cfg, out_dir);
    }
  });
}

}  // extern "C"
