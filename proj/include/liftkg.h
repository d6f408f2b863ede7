/* C API for the liftkg knowledge-graph-embedding engine.
 *
 * All functions return LKG_OK on success; on failure they return an error
 * code and leave a message retrievable with lkg_last_error() (thread-local).
 * Strings returned through char** outputs are heap-allocated and must be
 * released with lkg_string_free(); handles with their matching _free().
 */
#ifndef LIFTKG_H
#define LIFTKG_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lkg_status {
  LKG_OK = 0,
  LKG_USAGE_ERROR = 1,   /* bad arguments, config or file format */
  LKG_RUNTIME_ERROR = 2  /* runtime failure (divergence, incompatibility, I/O) */
} lkg_status;

typedef struct lkg_dataset_t lkg_dataset_t;
typedef struct lkg_model_t lkg_model_t;

const char* lkg_version(void);
const char* lkg_last_error(void);
void lkg_string_free(char* s);

/* format: "openke" or "tsv" */
lkg_status lkg_dataset_load(const char* path, const char* format, lkg_dataset_t** out);
lkg_status lkg_dataset_stats_json(const lkg_dataset_t* dataset, char** out_json);
void lkg_dataset_free(lkg_dataset_t* dataset);

/* config_json: an experiment config; lkg_default_config() documents the
 * schema. Returns the best checkpoint plus a summary (resolved config,
 * best learning rate, validation MRR) and the training log as CSV. Any
 * output pointer may be NULL to skip it. */
lkg_status lkg_train(const lkg_dataset_t* dataset, const char* config_json,
                     lkg_model_t** out_model, char** out_summary_json, char** out_log_csv);

lkg_status lkg_model_save(const lkg_model_t* model, const char* path);
lkg_status lkg_model_load(const char* path, lkg_model_t** out);
lkg_status lkg_model_info_json(const lkg_model_t* model, char** out_json);
void lkg_model_free(lkg_model_t* model);

/* split: "train", "valid" or "test". options_json (may be NULL):
 * {"tie_policy":"optimistic"|"average", "threads":N, "ks":[1,3,10]} */
lkg_status lkg_evaluate(const lkg_model_t* model, const lkg_dataset_t* dataset,
                        const char* split, const char* options_json, char** out_report_json);

/* spec_json: {"model":..., "dim":..., "out_dim":..., "liftnet":...,
 * "layers":..., "entities":|E|, "relations":|R|}; optional
 * "baseline": {...same fields...} adds a percentage entry. */
lkg_status lkg_count_params(const char* spec_json, char** out_report_json);

lkg_status lkg_plan_liftnet(int input_dim, int output_dim, int num_layers,
                            char** out_config_json);

/* rows_json: array of flat objects sharing one key set; format: "markdown",
 * "csv" or "json". Column order follows the first row's key order. */
lkg_status lkg_emit_table(const char* rows_json, const char* format, char** out_text);

/* preset: "defaults" or "reproduce" */
lkg_status lkg_default_config(const char* preset, char** out_config_json);

#ifdef __cplusplus
}
#endif

#endif /* LIFTKG_H */
