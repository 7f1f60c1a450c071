#include "harness.hpp"

#include <chrono>

#include "error.hpp"
#include "model_io.hpp"

namespace sdc {
namespace {

Network require_model(const ExperimentConfig& cfg) {
    if (cfg.model_path.empty()) throw_config("this command needs a \"model\" path");
    return load_model(cfg.model_path);
}

const DatasetSpec& require_eval_dataset(const ExperimentConfig& cfg) {
    if (cfg.test_dataset) return *cfg.test_dataset;
    if (cfg.dataset) return *cfg.dataset;
    throw_config("this command needs a \"dataset\" or \"test_dataset\" section");
}

double mean_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

void echo_inference(Record& r, int lambda_frozen, double drop_prob, const InferenceConfig& inf,
                    std::uint64_t seed) {
    r["lambda"] = lambda_frozen;
    r["drop_prob"] = drop_prob;
    r["passes"] = inf.passes;
    r["seed"] = seed;
    r["mode"] = mask_mode_name(inf.mode);
    r["scale_mode"] = scale_mode_name(inf.scale_mode);
}

}  // namespace

Dataset resolve_dataset(const DatasetSpec& spec) {
    switch (spec.source) {
    case DatasetSpec::Source::idx: return load_idx(spec.images, spec.labels);
    case DatasetSpec::Source::csv: return load_csv(spec.path);
    case DatasetSpec::Source::synthetic: return synth_dataset(spec.synth, spec.seed);
    }
    throw_config("unresolved dataset source");
}

Record predict_record(const Network& net, const Dataset& ds, int lambda_frozen, double drop_prob,
                      const InferenceConfig& inf, std::uint64_t seed) {
    const Tensor images = shaped_images(ds, net.input_shape);
    const MaskPlan plan{drop_prob, lambda_frozen, inf.mode, inf.scale_mode};

    const auto t0 = std::chrono::steady_clock::now();
    const PredictiveSummary summary = select_dc_predict(net, images, inf.passes, plan, seed, inf.keep_passes);
    const auto t1 = std::chrono::steady_clock::now();

    const FlopsReport flops = total_flops(net, lambda_frozen, inf.passes);
    Record r;
    echo_inference(r, lambda_frozen, drop_prob, inf, seed);
    r["accuracy"] = accuracy(summary.mean_probs, ds.labels);
    r["nll"] = nll(summary.mean_probs, ds.labels);
    r["mean_entropy"] = mean_of(summary.entropy);
    r["flops_grand_total"] = flops.grand_total;
    r["wall_time_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return r;
}

std::vector<Record> run_train(const ExperimentConfig& cfg) {
    if (!cfg.dataset) throw_config("train needs a \"dataset\" section");
    if (cfg.architecture_json.empty()) throw_config("train needs an \"architecture\" section");
    if (cfg.output.model.empty()) throw_config("train needs output.model to store the trained network");

    const Dataset train_set = resolve_dataset(*cfg.dataset);
    Dataset val_set;
    const bool has_val = cfg.test_dataset.has_value();
    if (has_val) val_set = resolve_dataset(*cfg.test_dataset);

    Network net = network_from_arch_json(cfg.architecture_json, cfg.train.seed);
    const FitResult result = fit(net, train_set, has_val ? &val_set : nullptr, cfg.train);
    save_model(net, cfg.output.model);

    std::vector<Record> records;
    records.reserve(result.epochs.size());
    for (const EpochStats& e : result.epochs) {
        Record r;
        r["epoch"] = e.epoch;
        r["train_loss"] = e.train_loss;
        if (has_val) r["val_accuracy"] = e.val_accuracy;
        r["lr_end"] = e.lr_end;
        r["seed"] = cfg.train.seed;
        r["drop_prob"] = cfg.train.drop_prob;
        r["lambda_frozen_train"] = cfg.train.lambda_frozen_train;
        r["mode"] = mask_mode_name(cfg.train.mode);
        r["scale_mode"] = scale_mode_name(cfg.train.scale_mode);
        records.push_back(std::move(r));
    }
    if (records.empty()) {
        Record r;
        r["epoch"] = -1;
        r["train_loss"] = 0.0;
        r["seed"] = cfg.train.seed;
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<Record> run_predict(const ExperimentConfig& cfg) {
    const Network net = require_model(cfg);
    const Dataset ds = resolve_dataset(require_eval_dataset(cfg));
    const int lambda_frozen = cfg.inference.lambdas.front();
    const double drop_prob = cfg.inference.drop_probs.front();
    return {predict_record(net, ds, lambda_frozen, drop_prob, cfg.inference, cfg.inference.seed)};
}

std::vector<Record> run_sweep(const ExperimentConfig& cfg) {
    const Network net = require_model(cfg);
    const Dataset ds = resolve_dataset(require_eval_dataset(cfg));
    std::vector<Record> records;
    std::uint64_t record_index = 0;
    for (int lambda_frozen : cfg.inference.lambdas) {
        for (double drop_prob : cfg.inference.drop_probs) {
            const std::uint64_t seed = mix_seed(cfg.inference.seed, record_index);
            Record r = predict_record(net, ds, lambda_frozen, drop_prob, cfg.inference, seed);
            r["record_index"] = record_index;
            records.push_back(std::move(r));
            ++record_index;
        }
    }
    return records;
}

std::vector<Record> run_ood(const ExperimentConfig& cfg) {
    const Network net = require_model(cfg);
    const Dataset id_set = resolve_dataset(require_eval_dataset(cfg));
    if (!cfg.ood_dataset) throw_config("ood needs an \"ood_dataset\" section");
    const Dataset ood_set = resolve_dataset(*cfg.ood_dataset);

    const Tensor id_images = shaped_images(id_set, net.input_shape);
    const Tensor ood_images = shaped_images(ood_set, net.input_shape);

    const std::size_t pairs = cfg.inference.lambdas.size() * cfg.inference.drop_probs.size();
    if (!cfg.output.curve.empty() && pairs != 1)
        throw_config("output.curve needs exactly one (lambda, drop_prob) pair, got " + std::to_string(pairs));

    std::vector<Record> records;
    for (int lambda_frozen : cfg.inference.lambdas) {
        for (double drop_prob : cfg.inference.drop_probs) {
            const MaskPlan plan{drop_prob, lambda_frozen, cfg.inference.mode, cfg.inference.scale_mode};
            const OodReport report =
                ood_evaluate(net, id_images, ood_images, cfg.inference.passes, plan, cfg.inference.seed);
            Record r;
            echo_inference(r, lambda_frozen, drop_prob, cfg.inference, cfg.inference.seed);
            r["id_mean_entropy"] = report.id_mean_entropy;
            r["ood_mean_entropy"] = report.ood_mean_entropy;
            r["auroc"] = report.auroc;
            records.push_back(std::move(r));

            if (!cfg.output.curve.empty()) {
                std::vector<Record> curve;
                curve.reserve(report.threshold_curve.size());
                for (const RocPoint& p : report.threshold_curve) {
                    Record row;
                    row["threshold"] = p.threshold;
                    row["tpr"] = p.tpr;
                    row["fpr"] = p.fpr;
                    curve.push_back(std::move(row));
                }
                emit_results(curve, "csv", cfg.output.curve);
            }
        }
    }
    return records;
}

std::vector<Record> run_flops(const ExperimentConfig& cfg) {
    std::vector<Record> records;
    if (cfg.uniform.present && !cfg.model_path.empty())
        throw_config("flops takes either a model or a uniform cost spec, not both");
    Network net;
    if (!cfg.uniform.present) {
        if (cfg.model_path.empty()) throw_config("flops needs a \"model\" path or a \"uniform\" section");
        net = load_model(cfg.model_path);
    }
    const char* cost_model = cfg.uniform.present ? "uniform" : "network";
    for (int lambda_frozen : cfg.inference.lambdas) {
        const FlopsReport report =
            cfg.uniform.present
                ? uniform_flops(cfg.uniform.layers, cfg.uniform.cost, lambda_frozen, cfg.inference.passes)
                : total_flops(net, lambda_frozen, cfg.inference.passes);
        Record r;
        r["lambda"] = report.lambda_frozen;
        r["passes"] = report.passes;
        r["cost_model"] = cost_model;
        r["n_weight_layers"] = report.n_weight_layers;
        r["frozen_total"] = report.frozen_total;
        r["stochastic_total"] = report.stochastic_total;
        r["grand_total"] = report.grand_total;
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<Record> run_rotate(const ExperimentConfig& cfg) {
    const Network net = require_model(cfg);
    const Dataset ds = resolve_dataset(require_eval_dataset(cfg));
    const Tensor images = shaped_images(ds, net.input_shape);
    if (images.rank() != 4) throw_data("rotate needs image-shaped inputs, got " + shape_str(images.shape));

    const int lambda_frozen = cfg.inference.lambdas.front();
    const double drop_prob = cfg.inference.drop_probs.front();
    const MaskPlan plan{drop_prob, lambda_frozen, cfg.inference.mode, cfg.inference.scale_mode};
    const std::vector<RotationPoint> sweep =
        rotation_entropy_sweep(net, images, cfg.angles, cfg.inference.passes, plan, cfg.inference.seed);

    std::vector<Record> records;
    records.reserve(sweep.size());
    for (const RotationPoint& p : sweep) {
        Record r;
        r["angle"] = p.angle;
        r["mean_entropy"] = p.mean_entropy;
        r["std_entropy"] = p.std_entropy;
        echo_inference(r, lambda_frozen, drop_prob, cfg.inference, cfg.inference.seed);
        records.push_back(std::move(r));
    }
    return records;
}

std::string run_command(const std::string& command, const std::string& config_json) {
    const ExperimentConfig cfg = parse_config(config_json);
    std::vector<Record> records;
    if (command == "train")
        records = run_train(cfg);
    else if (command == "predict")
        records = run_predict(cfg);
    else if (command == "sweep")
        records = run_sweep(cfg);
    else if (command == "ood")
        records = run_ood(cfg);
    else if (command == "flops")
        records = run_flops(cfg);
    else if (command == "rotate")
        records = run_rotate(cfg);
    else
        throw_config("unknown command \"" + command + "\"");

    if (!cfg.output.results.empty()) emit_results(records, cfg.output.format, cfg.output.results);
    return records_to_json(records);
}

}  // namespace sdc
