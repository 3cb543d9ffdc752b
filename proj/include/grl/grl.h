/* C interface to the video re-identification library. All functions are
 * synchronous and single-threaded. A session holds one validated
 * configuration; operations derive everything else from it and from the
 * paths they are given. Errors are reported as status codes, with the
 * message retrievable from the session (or grl_last_error for failures
 * that precede a session). */

#ifndef GRL_GRL_H
#define GRL_GRL_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct grl_session grl_session;

typedef enum grl_status {
  GRL_OK = 0,
  GRL_ERR_CONFIG = 1,   /* invalid or inconsistent configuration */
  GRL_ERR_DATA = 2,     /* dataset missing, malformed or unusable */
  GRL_ERR_NUMERIC = 3,  /* training diverged (non-finite values) */
  GRL_ERR_IO = 4,       /* file read/write failure */
  GRL_ERR_INVALID = 5,  /* bad argument (null pointer, shape misuse) */
  GRL_ERR_INTERNAL = 6  /* unexpected failure */
} grl_status;

/* Human-readable name of a status code (static storage). */
const char* grl_status_name(grl_status status);

/* Message of the most recent failure that happened outside a session
 * (e.g. a failed grl_session_create). Static thread-local storage. */
const char* grl_last_error(void);

/* Builds a session from an optional config file plus key=value overrides
 * (applied in order, after the file). Pass NULL for config_path to start
 * from defaults. On success *out owns the session; free it with
 * grl_session_destroy. */
grl_status grl_session_create(const char* config_path, const char* const* overrides,
                              int32_t n_overrides, grl_session** out);

void grl_session_destroy(grl_session* session);

/* Message of the most recent failure within this session. */
const char* grl_session_error(const grl_session* session);

/* Full configuration as key=value lines. Valid until the next call on the
 * same session. */
const char* grl_session_config_text(grl_session* session);

/* Renders the synthetic dataset described by the synth_* keys into out_dir.
 * A non-empty out_dir is an error unless force is nonzero. */
grl_status grl_session_generate(grl_session* session, const char* out_dir, int32_t force);

/* Trains on the dataset under data_root, writing logs and last.ckpt into
 * out_dir. Honors the resume key. */
grl_status grl_session_train(grl_session* session, const char* data_root, const char* out_dir);

/* Evaluates a checkpoint (or, if checkpoint_path is NULL, a freshly
 * initialized model) on the query/gallery splits under data_root and writes
 * report.txt / report.json into out_dir. On success *map_out and
 * *rank1_out receive the headline metrics when non-NULL. */
grl_status grl_session_evaluate(grl_session* session, const char* data_root,
                                const char* checkpoint_path, const char* out_dir,
                                double* map_out, double* rank1_out);

/* Trains and evaluates every row of the named preset (components, emu,
 * length, direction, losses) over num_seeds consecutive seeds and writes
 * ablation.csv / ablation.json into out_dir. */
grl_status grl_session_ablate(grl_session* session, const char* preset, const char* data_root,
                              const char* out_dir, int32_t num_seeds);

/* Exports per-frame correlation and memory visualizations for one tracklet
 * of the dataset into out_dir, using the given checkpoint (or a fresh
 * model when checkpoint_path is NULL). */
grl_status grl_session_heatmaps(grl_session* session, const char* data_root,
                                const char* checkpoint_path, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GRL_GRL_H */
