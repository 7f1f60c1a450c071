#include "config.hpp"

#include <json.hpp>

#include "error.hpp"

namespace sdc {
namespace {

using json = nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw_config(where + ": unknown key \"" + it.key() + "\"");
    }
}

const json* maybe(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

int take_int(const json& obj, const char* key, int fallback, const std::string& where) {
    const json* v = maybe(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw_config(where + "." + key + " must be an integer");
    return v->get<int>();
}

double take_double(const json& obj, const char* key, double fallback, const std::string& where) {
    const json* v = maybe(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) throw_config(where + "." + key + " must be a number");
    return v->get<double>();
}

bool take_bool(const json& obj, const char* key, bool fallback, const std::string& where) {
    const json* v = maybe(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw_config(where + "." + key + " must be a boolean");
    return v->get<bool>();
}

std::string take_string(const json& obj, const char* key, const std::string& fallback, const std::string& where) {
    const json* v = maybe(obj, key);
    if (!v) return fallback;
    if (!v->is_string()) throw_config(where + "." + key + " must be a string");
    return v->get<std::string>();
}

std::uint64_t take_seed(const json& obj, const char* key, std::uint64_t fallback, const std::string& where) {
    const json* v = maybe(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw_config(where + "." + key + " must be a non-negative integer");
    if (!v->is_number_unsigned() && v->get<long long>() < 0)
        throw_config(where + "." + key + " must be a non-negative integer");
    return v->get<std::uint64_t>();
}

DatasetSpec parse_dataset(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw_config(where + " must be an object");
    reject_unknown_keys(obj, {"kind", "images", "labels", "path", "generator", "n", "classes", "image_size", "seed"},
                        where);
    DatasetSpec spec;
    const std::string kind = take_string(obj, "kind", "", where);
    if (kind == "idx") {
        spec.source = DatasetSpec::Source::idx;
        spec.images = take_string(obj, "images", "", where);
        spec.labels = take_string(obj, "labels", "", where);
        if (spec.images.empty() || spec.labels.empty())
            throw_config(where + ": idx datasets need \"images\" and \"labels\" paths");
        for (const char* k : {"path", "generator", "n", "classes", "image_size", "seed"})
            if (maybe(obj, k)) throw_config(where + ": key \"" + k + "\" does not apply to idx datasets");
    } else if (kind == "csv") {
        spec.source = DatasetSpec::Source::csv;
        spec.path = take_string(obj, "path", "", where);
        if (spec.path.empty()) throw_config(where + ": csv datasets need \"path\"");
        for (const char* k : {"images", "labels", "generator", "n", "classes", "image_size", "seed"})
            if (maybe(obj, k)) throw_config(where + ": key \"" + k + "\" does not apply to csv datasets");
    } else if (kind == "synthetic") {
        spec.source = DatasetSpec::Source::synthetic;
        spec.synth.kind = synth_kind_from_name(take_string(obj, "generator", "blobs", where));
        spec.synth.n = take_int(obj, "n", 1000, where);
        spec.synth.classes = take_int(obj, "classes", 10, where);
        spec.synth.image_size = take_int(obj, "image_size", 28, where);
        spec.seed = take_seed(obj, "seed", 0, where);
        for (const char* k : {"images", "labels", "path"})
            if (maybe(obj, k)) throw_config(where + ": key \"" + k + "\" does not apply to synthetic datasets");
    } else if (kind.empty()) {
        throw_config(where + ": missing \"kind\" (idx, csv, or synthetic)");
    } else {
        throw_config(where + ": unknown dataset kind \"" + kind + "\"");
    }
    return spec;
}

TrainConfig parse_train(const json& obj) {
    const std::string where = "train";
    if (!obj.is_object()) throw_config("train must be an object");
    reject_unknown_keys(obj,
                        {"epochs", "batch_size", "lr_peak", "lr_floor", "phase1_frac", "phase2_frac", "momentum",
                         "weight_decay", "drop_prob", "lambda_frozen_train", "mode", "scale_mode", "shift_max",
                         "flip_prob", "seed"},
                        where);
    TrainConfig cfg;
    cfg.epochs = take_int(obj, "epochs", cfg.epochs, where);
    cfg.batch_size = take_int(obj, "batch_size", cfg.batch_size, where);
    cfg.lr_peak = take_double(obj, "lr_peak", cfg.lr_peak, where);
    cfg.lr_floor = take_double(obj, "lr_floor", cfg.lr_floor, where);
    cfg.phase1_frac = take_double(obj, "phase1_frac", cfg.phase1_frac, where);
    cfg.phase2_frac = take_double(obj, "phase2_frac", cfg.phase2_frac, where);
    cfg.momentum = take_double(obj, "momentum", cfg.momentum, where);
    cfg.weight_decay = take_double(obj, "weight_decay", cfg.weight_decay, where);
    cfg.drop_prob = take_double(obj, "drop_prob", cfg.drop_prob, where);
    cfg.lambda_frozen_train = take_int(obj, "lambda_frozen_train", cfg.lambda_frozen_train, where);
    cfg.mode = mask_mode_from_name(take_string(obj, "mode", mask_mode_name(cfg.mode), where));
    cfg.scale_mode = scale_mode_from_name(take_string(obj, "scale_mode", scale_mode_name(cfg.scale_mode), where));
    cfg.shift_max = take_int(obj, "shift_max", cfg.shift_max, where);
    cfg.flip_prob = take_double(obj, "flip_prob", cfg.flip_prob, where);
    cfg.seed = take_seed(obj, "seed", cfg.seed, where);
    validate_train_config(cfg);
    return cfg;
}

InferenceConfig parse_inference(const json& obj) {
    const std::string where = "inference";
    if (!obj.is_object()) throw_config("inference must be an object");
    reject_unknown_keys(obj, {"passes", "lambdas", "drop_probs", "mode", "scale_mode", "seed", "keep_passes"},
                        where);
    InferenceConfig cfg;
    cfg.passes = take_int(obj, "passes", cfg.passes, where);
    if (cfg.passes < 1) throw_config("inference.passes must be >= 1");
    if (const json* v = maybe(obj, "lambdas")) {
        if (!v->is_array() || v->empty()) throw_config("inference.lambdas must be a non-empty array");
        cfg.lambdas.clear();
        for (const json& e : *v) {
            if (!e.is_number_integer() || e.get<int>() < 0)
                throw_config("inference.lambdas entries must be non-negative integers");
            cfg.lambdas.push_back(e.get<int>());
        }
    }
    if (const json* v = maybe(obj, "drop_probs")) {
        if (!v->is_array() || v->empty()) throw_config("inference.drop_probs must be a non-empty array");
        cfg.drop_probs.clear();
        for (const json& e : *v) {
            if (!e.is_number() || e.get<double>() < 0.0 || e.get<double>() > 1.0)
                throw_config("inference.drop_probs entries must lie in [0,1]");
            cfg.drop_probs.push_back(e.get<double>());
        }
    }
    cfg.mode = mask_mode_from_name(take_string(obj, "mode", mask_mode_name(cfg.mode), where));
    cfg.scale_mode = scale_mode_from_name(take_string(obj, "scale_mode", scale_mode_name(cfg.scale_mode), where));
    cfg.seed = take_seed(obj, "seed", cfg.seed, where);
    cfg.keep_passes = take_bool(obj, "keep_passes", cfg.keep_passes, where);
    return cfg;
}

OutputConfig parse_output(const json& obj) {
    const std::string where = "output";
    if (!obj.is_object()) throw_config("output must be an object");
    reject_unknown_keys(obj, {"results", "format", "model", "curve"}, where);
    OutputConfig cfg;
    cfg.results = take_string(obj, "results", cfg.results, where);
    cfg.format = take_string(obj, "format", cfg.format, where);
    if (cfg.format != "json" && cfg.format != "csv")
        throw_config("output.format must be json or csv, got \"" + cfg.format + "\"");
    cfg.model = take_string(obj, "model", cfg.model, where);
    cfg.curve = take_string(obj, "curve", cfg.curve, where);
    return cfg;
}

UniformCostSpec parse_uniform(const json& obj) {
    const std::string where = "uniform";
    if (!obj.is_object()) throw_config("uniform must be an object");
    reject_unknown_keys(obj, {"layers", "cost"}, where);
    UniformCostSpec spec;
    spec.present = true;
    spec.layers = take_int(obj, "layers", 0, where);
    if (spec.layers < 1) throw_config("uniform.layers must be >= 1");
    const json* v = maybe(obj, "cost");
    if (v) {
        if (!v->is_number_integer() || v->get<long long>() < 1)
            throw_config("uniform.cost must be a positive integer");
        spec.cost = v->get<long long>();
    }
    return spec;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw_config(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw_config("config root must be a JSON object");
    reject_unknown_keys(root,
                        {"dataset", "test_dataset", "ood_dataset", "architecture", "train", "inference", "model",
                         "output", "angles", "uniform"},
                        "config");

    ExperimentConfig cfg;
    if (const json* v = maybe(root, "dataset")) cfg.dataset = parse_dataset(*v, "dataset");
    if (const json* v = maybe(root, "test_dataset")) cfg.test_dataset = parse_dataset(*v, "test_dataset");
    if (const json* v = maybe(root, "ood_dataset")) cfg.ood_dataset = parse_dataset(*v, "ood_dataset");
    if (const json* v = maybe(root, "architecture")) {
        if (!v->is_object()) throw_config("architecture must be an object");
        cfg.architecture_json = v->dump();
    }
    if (const json* v = maybe(root, "train")) {
        cfg.train = parse_train(*v);
        cfg.has_train = true;
    }
    if (const json* v = maybe(root, "inference")) cfg.inference = parse_inference(*v);
    cfg.model_path = take_string(root, "model", "", "config");
    if (const json* v = maybe(root, "output")) cfg.output = parse_output(*v);
    if (const json* v = maybe(root, "angles")) {
        if (!v->is_array() || v->empty()) throw_config("angles must be a non-empty array of numbers");
        cfg.angles.clear();
        for (const json& e : *v) {
            if (!e.is_number()) throw_config("angles entries must be numbers");
            cfg.angles.push_back(e.get<double>());
        }
    }
    if (const json* v = maybe(root, "uniform")) cfg.uniform = parse_uniform(*v);
    return cfg;
}

}  // namespace sdc
