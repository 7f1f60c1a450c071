#include "selectdc.h"

#include <cstring>
#include <string>

#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "mc.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "network.hpp"
#include "train.hpp"

struct sdc_model {
    sdc::Network net;
};
struct sdc_dataset {
    sdc::Dataset ds;
};
struct sdc_summary {
    sdc::PredictiveSummary s;
};

namespace {

thread_local std::string g_last_error;

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

sdc_status status_of(sdc::ErrorKind kind) {
    switch (kind) {
    case sdc::ErrorKind::config: return SDC_ERR_CONFIG;
    case sdc::ErrorKind::data: return SDC_ERR_DATA;
    case sdc::ErrorKind::dimension: return SDC_ERR_DIMENSION;
    case sdc::ErrorKind::numeric: return SDC_ERR_NUMERIC;
    case sdc::ErrorKind::io: return SDC_ERR_IO;
    }
    return SDC_ERR_INTERNAL;
}

template <class F>
sdc_status guarded(F&& body) {
    try {
        body();
        return SDC_OK;
    } catch (const sdc::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SDC_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return SDC_ERR_INTERNAL;
    }
}

sdc_status invalid(const char* message) {
    g_last_error = message;
    return SDC_ERR_INVALID_ARGUMENT;
}

sdc::MaskPlan make_plan(int lambda_frozen, double drop_prob, const char* mode, const char* scale_mode) {
    sdc::MaskPlan plan;
    plan.drop_prob = drop_prob;
    plan.lambda_frozen = lambda_frozen;
    plan.mode = sdc::mask_mode_from_name(mode ? mode : "dropconnect");
    plan.scale_mode = sdc::scale_mode_from_name(scale_mode ? scale_mode : "inverted");
    return plan;
}

nlohmann::ordered_json flops_json(const sdc::FlopsReport& r) {
    nlohmann::ordered_json j;
    j["lambda"] = r.lambda_frozen;
    j["passes"] = r.passes;
    j["n_weight_layers"] = r.n_weight_layers;
    j["per_layer_flops"] = r.per_layer_flops;
    j["frozen_total"] = r.frozen_total;
    j["stochastic_total"] = r.stochastic_total;
    j["grand_total"] = r.grand_total;
    return j;
}

}  // namespace

extern "C" {

const char* sdc_version(void) { return "1.0.0"; }

const char* sdc_status_name(sdc_status status) {
    switch (status) {
    case SDC_OK: return "ok";
    case SDC_ERR_CONFIG: return "config";
    case SDC_ERR_DATA: return "data";
    case SDC_ERR_DIMENSION: return "dimension";
    case SDC_ERR_NUMERIC: return "numeric";
    case SDC_ERR_IO: return "io";
    case SDC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SDC_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* sdc_last_error(void) { return g_last_error.c_str(); }

void sdc_string_free(char* s) { delete[] s; }

sdc_status sdc_model_load(const char* path, sdc_model** out) {
    if (!path || !out) return invalid("sdc_model_load: path and out must be non-NULL");
    return guarded([&] { *out = new sdc_model{sdc::load_model(path)}; });
}

sdc_status sdc_model_save(const sdc_model* model, const char* path) {
    if (!model || !path) return invalid("sdc_model_save: model and path must be non-NULL");
    return guarded([&] { sdc::save_model(model->net, path); });
}

sdc_status sdc_model_build(const char* arch_json, uint64_t init_seed, sdc_model** out) {
    if (!arch_json || !out) return invalid("sdc_model_build: arch_json and out must be non-NULL");
    return guarded([&] { *out = new sdc_model{sdc::network_from_arch_json(arch_json, init_seed)}; });
}

sdc_status sdc_model_default_arch(int classes, int channels, int height, int width, char** out_json) {
    if (!out_json) return invalid("sdc_model_default_arch: out_json must be non-NULL");
    return guarded([&] { *out_json = copy_string(sdc::default_cnn_arch_json(classes, channels, height, width)); });
}

sdc_status sdc_model_summary(const sdc_model* model, char** out_json) {
    if (!model || !out_json) return invalid("sdc_model_summary: model and out_json must be non-NULL");
    return guarded([&] { *out_json = copy_string(sdc::model_summary_json(model->net)); });
}

int sdc_model_weight_layers(const sdc_model* model) { return model ? model->net.n_weight_layers() : -1; }

int sdc_model_classes(const sdc_model* model) {
    if (!model) return -1;
    try {
        return model->net.n_classes();
    } catch (...) {
        return -1;
    }
}

void sdc_model_free(sdc_model* model) { delete model; }

sdc_status sdc_dataset_load_idx(const char* images_path, const char* labels_path, sdc_dataset** out) {
    if (!images_path || !labels_path || !out)
        return invalid("sdc_dataset_load_idx: all arguments must be non-NULL");
    return guarded([&] { *out = new sdc_dataset{sdc::load_idx(images_path, labels_path)}; });
}

sdc_status sdc_dataset_load_csv(const char* path, sdc_dataset** out) {
    if (!path || !out) return invalid("sdc_dataset_load_csv: path and out must be non-NULL");
    return guarded([&] { *out = new sdc_dataset{sdc::load_csv(path)}; });
}

sdc_status sdc_dataset_synth(const char* kind, int n, int classes, int image_size, uint64_t seed,
                             sdc_dataset** out) {
    if (!kind || !out) return invalid("sdc_dataset_synth: kind and out must be non-NULL");
    return guarded([&] {
        sdc::SynthSpec spec;
        spec.kind = sdc::synth_kind_from_name(kind);
        spec.n = n;
        spec.classes = classes;
        spec.image_size = image_size;
        *out = new sdc_dataset{sdc::synth_dataset(spec, seed)};
    });
}

sdc_status sdc_dataset_save_idx(const sdc_dataset* ds, const char* images_path, const char* labels_path) {
    if (!ds || !images_path || !labels_path)
        return invalid("sdc_dataset_save_idx: all arguments must be non-NULL");
    return guarded([&] { sdc::save_idx(ds->ds, images_path, labels_path); });
}

int sdc_dataset_size(const sdc_dataset* ds) { return ds ? ds->ds.size() : -1; }

int sdc_dataset_classes(const sdc_dataset* ds) { return ds ? ds->ds.classes : -1; }

void sdc_dataset_free(sdc_dataset* ds) { delete ds; }

sdc_status sdc_train(sdc_model* model, const sdc_dataset* train_set, const sdc_dataset* val_set,
                     const char* train_json, char** out_epochs_json) {
    if (!model || !train_set) return invalid("sdc_train: model and train_set must be non-NULL");
    return guarded([&] {
        const std::string wrapped = std::string("{\"train\":") + (train_json ? train_json : "{}") + "}";
        const sdc::ExperimentConfig cfg = sdc::parse_config(wrapped);
        const sdc::FitResult result =
            sdc::fit(model->net, train_set->ds, val_set ? &val_set->ds : nullptr, cfg.train);
        if (out_epochs_json) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const sdc::EpochStats& e : result.epochs) {
                nlohmann::ordered_json j;
                j["epoch"] = e.epoch;
                j["train_loss"] = e.train_loss;
                if (val_set) j["val_accuracy"] = e.val_accuracy;
                j["lr_end"] = e.lr_end;
                arr.push_back(j);
            }
            *out_epochs_json = copy_string(arr.dump(2));
        }
    });
}

sdc_status sdc_predict(const sdc_model* model, const sdc_dataset* ds, int passes, int lambda_frozen,
                       double drop_prob, const char* mode, const char* scale_mode, uint64_t seed,
                       sdc_summary** out) {
    if (!model || !ds || !out) return invalid("sdc_predict: model, ds and out must be non-NULL");
    return guarded([&] {
        const sdc::MaskPlan plan = make_plan(lambda_frozen, drop_prob, mode, scale_mode);
        const sdc::Tensor images = sdc::shaped_images(ds->ds, model->net.input_shape);
        *out = new sdc_summary{sdc::select_dc_predict(model->net, images, passes, plan, seed)};
    });
}

int sdc_summary_inputs(const sdc_summary* s) { return s ? s->s.mean_probs.dim(0) : -1; }

int sdc_summary_classes(const sdc_summary* s) { return s ? s->s.mean_probs.dim(1) : -1; }

sdc_status sdc_summary_mean_probs(const sdc_summary* s, float* out, size_t len) {
    if (!s || !out) return invalid("sdc_summary_mean_probs: s and out must be non-NULL");
    if (len != s->s.mean_probs.size()) return invalid("sdc_summary_mean_probs: len does not match inputs*classes");
    std::memcpy(out, s->s.mean_probs.ptr(), len * sizeof(float));
    return SDC_OK;
}

sdc_status sdc_summary_entropy(const sdc_summary* s, double* out, size_t len) {
    if (!s || !out) return invalid("sdc_summary_entropy: s and out must be non-NULL");
    if (len != s->s.entropy.size()) return invalid("sdc_summary_entropy: len does not match input count");
    std::memcpy(out, s->s.entropy.data(), len * sizeof(double));
    return SDC_OK;
}

void sdc_summary_free(sdc_summary* s) { delete s; }

sdc_status sdc_flops(const sdc_model* model, int lambda_frozen, int passes, char** out_json) {
    if (!model || !out_json) return invalid("sdc_flops: model and out_json must be non-NULL");
    return guarded(
        [&] { *out_json = copy_string(flops_json(sdc::total_flops(model->net, lambda_frozen, passes)).dump(2)); });
}

sdc_status sdc_flops_uniform(int layers, long long cost_per_layer, int lambda_frozen, int passes,
                             char** out_json) {
    if (!out_json) return invalid("sdc_flops_uniform: out_json must be non-NULL");
    return guarded([&] {
        *out_json = copy_string(flops_json(sdc::uniform_flops(layers, cost_per_layer, lambda_frozen, passes)).dump(2));
    });
}

sdc_status sdc_run(const char* command, const char* config_json, char** out_records_json) {
    if (!command || !config_json) return invalid("sdc_run: command and config_json must be non-NULL");
    return guarded([&] {
        const std::string records = sdc::run_command(command, config_json);
        if (out_records_json) *out_records_json = copy_string(records);
    });
}

sdc_status sdc_config_validate(const char* config_json) {
    if (!config_json) return invalid("sdc_config_validate: config_json must be non-NULL");
    return guarded([&] { sdc::parse_config(config_json); });
}

}  // extern "C"
