/* C interface to the neubm library.
 *
 * Every fallible call returns a neubm_status. On failure the message is
 * available from neubm_last_error() until the next call on the same thread.
 * Strings returned through char** out-parameters are owned by the caller and
 * must be released with neubm_string_free(). Configuration is passed as JSON
 * text using the same field names as the experiment config file.
 */
#ifndef NEUBM_H
#define NEUBM_H

#include <stddef.h>
#include <stdint.h>

#if defined(NEUBM_BUILDING)
#define NEUBM_API __attribute__((visibility("default")))
#else
#define NEUBM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum neubm_status {
  NEUBM_OK = 0,
  NEUBM_ERR_INTERNAL = 1,
  NEUBM_ERR_CONFIG = 2,
  NEUBM_ERR_DATA = 3,
  NEUBM_ERR_NUMERIC = 4,
  NEUBM_ERR_IO = 5
} neubm_status;

typedef struct neubm_graph neubm_graph;
typedef struct neubm_model neubm_model;

NEUBM_API const char* neubm_version(void);
NEUBM_API const char* neubm_last_error(void);
NEUBM_API void neubm_string_free(char* s);

/* Graphs */
NEUBM_API neubm_status neubm_graph_load(const char* dir, neubm_graph** out);
/* sbm_json: {"num_classes":5,"total_nodes":2000,"rho":10,...}; missing keys take defaults. */
NEUBM_API neubm_status neubm_graph_generate_sbm(const char* sbm_json, neubm_graph** out);
NEUBM_API neubm_status neubm_graph_save(const neubm_graph* graph, const char* dir);
/* Summary line, class counts, rho (max/min) and min/max, as JSON. */
NEUBM_API neubm_status neubm_graph_stats_json(const neubm_graph* graph, char** out_json);
/* Stratified split written into the graph's train/val/test masks. */
NEUBM_API neubm_status neubm_graph_split(neubm_graph* graph, double train_frac, double val_frac,
                                         int64_t min_per_class, uint64_t seed);
NEUBM_API int64_t neubm_graph_num_nodes(const neubm_graph* graph);
NEUBM_API int neubm_graph_num_classes(const neubm_graph* graph);
NEUBM_API void neubm_graph_free(neubm_graph* graph);

/* Models
 *
 * config_json: {"model":{...},"train":{...},"protocol":{...}}. The graph's
 * train/val masks are used when present; otherwise a stratified split is drawn
 * from the protocol fractions and base_seed.
 */
NEUBM_API neubm_status neubm_train(const neubm_graph* graph, const char* config_json, neubm_model** out,
                                   char** report_json);
NEUBM_API neubm_status neubm_model_save(const neubm_model* model, const char* path);
NEUBM_API neubm_status neubm_model_load(const char* path, neubm_model** out);
NEUBM_API int neubm_model_num_classes(const neubm_model* model);
/* Row-major num_nodes x num_classes eval-mode logits into out[capacity]. */
NEUBM_API neubm_status neubm_model_logits(const neubm_model* model, const neubm_graph* graph, double* out,
                                          size_t capacity);
NEUBM_API void neubm_model_free(neubm_model* model);

/* Calibration
 *
 * options_json: {"calibration":{"variant":"subtract","position":"logits"},
 *                "neutral":{...}}. Builds the neutral graph from the dataset
 * statistics, writes node_id,predicted_label,p0.. to predictions_csv and
 * returns the neutral logit vector and bias diagnostics as JSON.
 */
NEUBM_API neubm_status neubm_calibrate(const neubm_model* model, const neubm_graph* graph, const char* options_json,
                                       const char* predictions_csv, char** summary_json);
/* Pure calibration of raw logits. out_probs holds rows*classes values,
 * out_labels rows values; either may be null. */
NEUBM_API neubm_status neubm_calibrate_logits(const double* logits, size_t rows, size_t classes,
                                              const double* neutral_logits, const char* spec_json, double* out_probs,
                                              int* out_labels);

/* Metrics */
/* Scores a predictions CSV against the graph labels on a named mask ("" or
 * null: every labeled node). */
NEUBM_API neubm_status neubm_evaluate(const char* predictions_csv, const neubm_graph* graph, const char* mask,
                                      char** metrics_json);
/* bandwidth <= 0 selects the median heuristic. x and y are row-major. */
NEUBM_API neubm_status neubm_mmd_rbf(const double* x, size_t nx, const double* y, size_t ny, size_t dim,
                                     double bandwidth, double* out);

/* Experiments
 *
 * mode: "experiment", "ablate" or "sweep". Reports go to output_dir (the
 * config's output_dir when null). summary_json receives the aggregate table.
 * Wall times are written to timing_path when it is not null, never into the
 * reports themselves, so reports stay byte-identical across reruns.
 */
NEUBM_API neubm_status neubm_run(const char* config_json, const char* mode, const char* output_dir,
                                 const char* timing_path, char** summary_json);
NEUBM_API neubm_status neubm_plot(const char* sweep_json_path, const char* variable, const char* metric,
                                  const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif
