#ifndef SELECTDC_H
#define SELECTDC_H

/* Monte Carlo DropConnect inference engine with frozen-prefix caching.
 *
 * Conventions: every fallible call returns an sdc_status; SDC_OK is 0.
 * On failure, sdc_last_error() describes the problem (thread-local storage,
 * overwritten by the next failing call on the same thread). Strings returned
 * through char** out parameters are heap copies owned by the caller; release
 * them with sdc_string_free. Opaque handles are released with their matching
 * _free function; passing NULL to a _free function is a no-op.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SDC_API __declspec(dllexport)
#else
#define SDC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdc_status {
    SDC_OK = 0,
    SDC_ERR_CONFIG = 1,
    SDC_ERR_DATA = 2,
    SDC_ERR_DIMENSION = 3,
    SDC_ERR_NUMERIC = 4,
    SDC_ERR_IO = 5,
    SDC_ERR_INVALID_ARGUMENT = 6,
    SDC_ERR_INTERNAL = 7
} sdc_status;

typedef struct sdc_model sdc_model;
typedef struct sdc_dataset sdc_dataset;
typedef struct sdc_summary sdc_summary;

SDC_API const char* sdc_version(void);
SDC_API const char* sdc_status_name(sdc_status status);
SDC_API const char* sdc_last_error(void);
SDC_API void sdc_string_free(char* s);

/* -- models ------------------------------------------------------------- */

/* Binary "SDCM" model files, bit-exact round trip. */
SDC_API sdc_status sdc_model_load(const char* path, sdc_model** out);
SDC_API sdc_status sdc_model_save(const sdc_model* model, const char* path);

/* arch_json: {"input":[...],"layers":[...]} or
 * {"preset":"default_cnn","input":[c,h,w],"classes":n}; weights drawn
 * deterministically from init_seed. */
SDC_API sdc_status sdc_model_build(const char* arch_json, uint64_t init_seed, sdc_model** out);
SDC_API sdc_status sdc_model_default_arch(int classes, int channels, int height, int width, char** out_json);
SDC_API sdc_status sdc_model_summary(const sdc_model* model, char** out_json);
SDC_API int sdc_model_weight_layers(const sdc_model* model);
SDC_API int sdc_model_classes(const sdc_model* model);
SDC_API void sdc_model_free(sdc_model* model);

/* -- datasets ----------------------------------------------------------- */

SDC_API sdc_status sdc_dataset_load_idx(const char* images_path, const char* labels_path, sdc_dataset** out);
SDC_API sdc_status sdc_dataset_load_csv(const char* path, sdc_dataset** out);

/* kind: "blobs", "stripes", or "noise". */
SDC_API sdc_status sdc_dataset_synth(const char* kind, int n, int classes, int image_size, uint64_t seed,
                                     sdc_dataset** out);
SDC_API sdc_status sdc_dataset_save_idx(const sdc_dataset* ds, const char* images_path, const char* labels_path);
SDC_API int sdc_dataset_size(const sdc_dataset* ds);
SDC_API int sdc_dataset_classes(const sdc_dataset* ds);
SDC_API void sdc_dataset_free(sdc_dataset* ds);

/* -- training ----------------------------------------------------------- */

/* Trains the model in place. train_json holds the training fields, e.g.
 * {"epochs":20,"batch_size":100,"drop_prob":0.1,"seed":7}; missing fields
 * take their documented defaults. val_set may be NULL. On success
 * out_epochs_json (optional, may be NULL) receives a JSON array of per-epoch
 * records. */
SDC_API sdc_status sdc_train(sdc_model* model, const sdc_dataset* train_set, const sdc_dataset* val_set,
                             const char* train_json, char** out_epochs_json);

/* -- inference ---------------------------------------------------------- */

/* Monte Carlo prediction over the whole dataset with the leading
 * lambda_frozen weight-bearing layers computed once and cached. mode is
 * "dropconnect", "dropout", or "deterministic"; scale_mode is "inverted" or
 * "none". */
SDC_API sdc_status sdc_predict(const sdc_model* model, const sdc_dataset* ds, int passes, int lambda_frozen,
                               double drop_prob, const char* mode, const char* scale_mode, uint64_t seed,
                               sdc_summary** out);
SDC_API int sdc_summary_inputs(const sdc_summary* s);
SDC_API int sdc_summary_classes(const sdc_summary* s);

/* out must hold inputs*classes floats (mean_probs) / inputs doubles
 * (entropy, in nats). */
SDC_API sdc_status sdc_summary_mean_probs(const sdc_summary* s, float* out, size_t len);
SDC_API sdc_status sdc_summary_entropy(const sdc_summary* s, double* out, size_t len);
SDC_API void sdc_summary_free(sdc_summary* s);

/* -- cost model --------------------------------------------------------- */

/* Per-layer flop costs split at the frozen boundary; grand total prices the
 * frozen prefix once and the stochastic tail `passes` times. Result is a
 * JSON object. */
SDC_API sdc_status sdc_flops(const sdc_model* model, int lambda_frozen, int passes, char** out_json);
SDC_API sdc_status sdc_flops_uniform(int layers, long long cost_per_layer, int lambda_frozen, int passes,
                                     char** out_json);

/* -- experiments -------------------------------------------------------- */

/* command: train | predict | sweep | ood | flops | rotate. config_json is
 * the experiment config document; any configured output files are written
 * and out_records_json (optional, may be NULL) receives the result records
 * as a JSON array. */
SDC_API sdc_status sdc_run(const char* command, const char* config_json, char** out_records_json);

/* Schema check only; SDC_OK when config_json parses cleanly. */
SDC_API sdc_status sdc_config_validate(const char* config_json);

#ifdef __cplusplus
}
#endif

#endif /* SELECTDC_H */
