#ifndef DNIM_DNIM_H
#define DNIM_DNIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(DNIM_BUILDING_LIBRARY)
#define DNIM_API __attribute__((visibility("default")))
#else
#define DNIM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returning int returns one of these. On failure the message
   is available from dnim_last_error() on the calling thread. */
enum dnim_status {
    DNIM_OK = 0,
    DNIM_ERR_USAGE = 1,   /* invalid argument, unknown key, out-of-range id */
    DNIM_ERR_DATA = 2,    /* unreadable or malformed input */
    DNIM_ERR_NUMERIC = 3  /* NaN or Inf produced */
};

typedef struct dnim_graph dnim_graph;
typedef struct dnim_log dnim_log;
typedef struct dnim_model dnim_model;

DNIM_API const char* dnim_last_error(void);
DNIM_API const char* dnim_version(void);
/* Releases strings returned through char** out-parameters. */
DNIM_API void dnim_string_free(char* s);

/* ---- graphs ---- */

enum dnim_weight_column { DNIM_WEIGHT_AUTO = 0, DNIM_WEIGHT_PRESENT = 1, DNIM_WEIGHT_ABSENT = 2 };

typedef struct {
    char delimiter; /* 0: comma when present on the line, else whitespace */
    int weight_column;
    int drop_loops;
    int dedup;
    int has_t_start;
    int64_t t_start;
    int has_t_end;
    int64_t t_end;
} dnim_load_options;

typedef struct {
    size_t n_nodes;
    size_t n_edges;
    int64_t t_start;
    int64_t t_end;
    int64_t duration;
    double density; /* edges per node */
} dnim_graph_info;

DNIM_API void dnim_load_options_init(dnim_load_options* opts);
/* Reads a binary cache or a delimited edge list (detected from the header). */
DNIM_API int dnim_graph_load(const char* path, const dnim_load_options* opts, dnim_graph** out);
/* Dense ids in [0, n_nodes); original ids equal dense ids. */
DNIM_API int dnim_graph_from_edges(size_t n_nodes, const uint32_t* src, const uint32_t* dst, const int64_t* timestamps,
                                   size_t n_edges, dnim_graph** out);
DNIM_API int dnim_graph_save_cache(const dnim_graph* g, const char* path);
DNIM_API int dnim_graph_info_get(const dnim_graph* g, dnim_graph_info* out);
DNIM_API int dnim_graph_original_id(const dnim_graph* g, uint32_t node, int64_t* out);
DNIM_API int dnim_graph_find_node(const dnim_graph* g, int64_t original_id, uint32_t* out);
DNIM_API void dnim_graph_free(dnim_graph* g);

/* ---- diffusion ---- */

typedef struct {
    double mu;
    int64_t t_act; /* seconds */
    uint64_t rng_seed;
} dnim_diffusion_params;

typedef struct {
    uint64_t attempts;
    uint64_t successes;
    uint64_t successes_on_active;
} dnim_diffusion_stats;

typedef struct {
    double mean; /* seconds */
    double std_dev;
    size_t replications;
    dnim_diffusion_stats stats; /* summed over replications */
    double fraction_active;     /* percent of successes whose target was already active */
} dnim_influence_estimate;

DNIM_API void dnim_diffusion_params_init(dnim_diffusion_params* p);
/* "2592000", "30d", "1mo", ... into seconds. */
DNIM_API int dnim_parse_duration(const char* text, int64_t* out);

/* Seeds are dense ids. */
DNIM_API int dnim_run_diffusion(const dnim_graph* g, const uint32_t* seeds, size_t n_seeds,
                                const dnim_diffusion_params* p, dnim_log** out);
DNIM_API int dnim_log_influence(const dnim_log* log, double* out);
DNIM_API int dnim_log_stats(const dnim_log* log, dnim_diffusion_stats* out);
/* counts must hold n_windows entries. */
DNIM_API int dnim_log_window_activity(const dnim_log* log, size_t n_windows, size_t* counts);
/* CSV `node,start,end` with original node ids, one row per interval. */
DNIM_API int dnim_log_write_csv(const dnim_log* log, const char* path);
DNIM_API void dnim_log_free(dnim_log* log);

DNIM_API double dnim_fraction_active(const dnim_diffusion_stats* stats);

/* threads == 0 uses every hardware thread; results never depend on it. */
DNIM_API int dnim_estimate_influence(const dnim_graph* g, const uint32_t* seeds, size_t n_seeds,
                                     const dnim_diffusion_params* p, size_t reps, size_t threads,
                                     dnim_influence_estimate* out);
/* out must hold n_windows entries: mean active-node count per window. */
DNIM_API int dnim_mean_window_activity(const dnim_graph* g, const uint32_t* seeds, size_t n_seeds,
                                       const dnim_diffusion_params* p, size_t reps, size_t n_windows, size_t threads,
                                       double* out);
DNIM_API int dnim_marginal_gain(const dnim_graph* g, const uint32_t* base, size_t n_base, uint32_t node,
                                const dnim_diffusion_params* p, size_t reps, int use_crn, size_t threads,
                                double* mean, double* std_dev);

/* ---- baseline selectors (out holds k dense ids) ---- */

DNIM_API int dnim_select_greedy(const dnim_graph* g, size_t k, const dnim_diffusion_params* p, size_t reps,
                                size_t threads, uint32_t* out);
DNIM_API int dnim_select_degree(const dnim_graph* g, size_t k, uint32_t* out);
DNIM_API int dnim_select_random(const dnim_graph* g, size_t k, uint64_t rng_seed, uint32_t* out);

/* ---- learned policy ---- */

/* Called after every training episode; has_loss is 0 when no gradient step ran. */
typedef void (*dnim_episode_callback)(size_t episode, double episode_return, int has_loss, double loss,
                                      double epsilon, void* user);

/* Full training config (defaults filled in) as a JSON object. */
DNIM_API int dnim_config_defaults(char** json_out);
/* Validates a flat JSON config and returns it with defaults filled in. */
DNIM_API int dnim_config_normalize(const char* json, char** json_out);

/* log_csv may be NULL; otherwise `episode,return,loss,epsilon` is written. */
DNIM_API int dnim_train(const dnim_graph* g, const char* config_json, const char* log_csv,
                        dnim_episode_callback callback, void* user, dnim_model** out);
/* Writes `path` (binary tensors) and `path.json` (manifest). */
DNIM_API int dnim_model_save(const dnim_model* m, const char* path);
DNIM_API int dnim_model_load(const char* path, dnim_model** out);
DNIM_API int dnim_model_select(const dnim_model* m, const dnim_graph* g, size_t k, uint32_t* out);
DNIM_API void dnim_model_free(dnim_model* m);

#ifdef __cplusplus
}
#endif

#endif
