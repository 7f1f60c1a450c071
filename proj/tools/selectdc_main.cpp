#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "selectdc.h"

namespace {

using json = nlohmann::json;

int fail_config(const std::string& message) {
    std::cerr << "error[config]: " << message << "\n";
    return 1;
}

int run(const char* command, const json& config) {
    char* records = nullptr;
    const sdc_status st = sdc_run(command, config.dump().c_str(), &records);
    if (st == SDC_OK) {
        std::cout << records;
        sdc_string_free(records);
        return 0;
    }
    std::cerr << "error[" << sdc_status_name(st) << "]: " << sdc_last_error() << "\n";
    return st == SDC_ERR_CONFIG ? 1 : 2;
}

// Shared state for one subcommand: the config file plus flag overrides that
// are applied on top of it.
struct Options {
    std::string config_path;

    std::optional<std::string> model, model_out, results, format, mode, scale_mode, curve;
    std::optional<std::string> images, labels, csv, test_images, test_labels, ood_images, ood_labels;
    std::optional<int> passes, lambda, epochs, batch_size, lambda_train, shift_max, uniform_layers;
    std::optional<long long> uniform_cost;
    std::optional<std::vector<int>> lambdas;
    std::optional<std::vector<double>> drop_probs, angles;
    std::optional<double> drop_prob, flip_prob;
    std::optional<std::uint64_t> seed;
    bool keep_passes = false;

    json build_config() const {
        json config = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            config = json::parse(buf.str(), nullptr, false);
            if (config.is_discarded())
                throw CLI::ValidationError("--config", config_path + " is not valid JSON");
        }
        if (model) config["model"] = *model;

        if (images || labels) {
            config["dataset"] = {{"kind", "idx"},
                                 {"images", images.value_or("")},
                                 {"labels", labels.value_or("")}};
        } else if (csv) {
            config["dataset"] = {{"kind", "csv"}, {"path", *csv}};
        }
        if (test_images || test_labels)
            config["test_dataset"] = {{"kind", "idx"},
                                      {"images", test_images.value_or("")},
                                      {"labels", test_labels.value_or("")}};
        if (ood_images || ood_labels)
            config["ood_dataset"] = {{"kind", "idx"},
                                     {"images", ood_images.value_or("")},
                                     {"labels", ood_labels.value_or("")}};

        if (results) config["output"]["results"] = *results;
        if (format) config["output"]["format"] = *format;
        if (model_out) config["output"]["model"] = *model_out;
        if (curve) config["output"]["curve"] = *curve;

        if (uniform_layers) config["uniform"]["layers"] = *uniform_layers;
        if (uniform_cost) config["uniform"]["cost"] = *uniform_cost;
        if (angles) config["angles"] = *angles;
        return config;
    }

    void apply_inference(json& config) const {
        if (passes) config["inference"]["passes"] = *passes;
        if (lambda) config["inference"]["lambdas"] = std::vector<int>{*lambda};
        if (lambdas) config["inference"]["lambdas"] = *lambdas;
        if (drop_prob) config["inference"]["drop_probs"] = std::vector<double>{*drop_prob};
        if (drop_probs) config["inference"]["drop_probs"] = *drop_probs;
        if (mode) config["inference"]["mode"] = *mode;
        if (scale_mode) config["inference"]["scale_mode"] = *scale_mode;
        if (seed) config["inference"]["seed"] = *seed;
        if (keep_passes) config["inference"]["keep_passes"] = true;
    }

    void apply_train(json& config) const {
        if (epochs) config["train"]["epochs"] = *epochs;
        if (batch_size) config["train"]["batch_size"] = *batch_size;
        if (drop_prob) config["train"]["drop_prob"] = *drop_prob;
        if (lambda_train) config["train"]["lambda_frozen_train"] = *lambda_train;
        if (mode) config["train"]["mode"] = *mode;
        if (scale_mode) config["train"]["scale_mode"] = *scale_mode;
        if (shift_max) config["train"]["shift_max"] = *shift_max;
        if (flip_prob) config["train"]["flip_prob"] = *flip_prob;
        if (seed) config["train"]["seed"] = *seed;
    }
};

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config_path, "experiment config JSON file");
    cmd->add_option("--results", opt.results, "results file to write");
    cmd->add_option("--format", opt.format, "results format: json or csv");
    cmd->add_option("--seed", opt.seed, "seed override");
}

void add_dataset_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--images", opt.images, "IDX image file for the primary dataset");
    cmd->add_option("--labels", opt.labels, "IDX label file for the primary dataset");
    cmd->add_option("--csv", opt.csv, "CSV dataset (label,p0,p1,...)");
    cmd->add_option("--test-images", opt.test_images, "IDX image file for the evaluation dataset");
    cmd->add_option("--test-labels", opt.test_labels, "IDX label file for the evaluation dataset");
}

void add_inference_flags(CLI::App* cmd, Options& opt, bool lists) {
    cmd->add_option("--model", opt.model, "model file (SDCM)");
    cmd->add_option("--passes", opt.passes, "Monte Carlo passes");
    auto* one = cmd->add_option("--lambda", opt.lambda, "frozen weight-layer count");
    cmd->add_option("--drop-prob", opt.drop_prob, "drop probability");
    if (lists) {
        auto* many = cmd->add_option("--lambdas", opt.lambdas, "comma list of frozen layer counts")
                         ->delimiter(',');
        one->excludes(many);
        many->excludes(one);
        cmd->add_option("--drop-probs", opt.drop_probs, "comma list of drop probabilities")->delimiter(',');
    }
    cmd->add_option("--mode", opt.mode, "dropconnect, dropout, or deterministic");
    cmd->add_option("--scale-mode", opt.scale_mode, "inverted or none");
    cmd->add_flag("--keep-passes", opt.keep_passes, "retain per-pass probabilities");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo DropConnect engine with frozen-prefix caching"};
    app.set_version_flag("--version", sdc_version());
    app.require_subcommand(1);
    int exit_code = 0;

    Options train_opt;
    auto* train = app.add_subcommand("train", "fit a model and write it to disk");
    add_common(train, train_opt);
    add_dataset_flags(train, train_opt);
    train->add_option("--model-out", train_opt.model_out, "where to store the trained model");
    train->add_option("--epochs", train_opt.epochs, "training epochs");
    train->add_option("--batch-size", train_opt.batch_size, "mini-batch size");
    train->add_option("--drop-prob", train_opt.drop_prob, "training drop probability");
    train->add_option("--lambda-train", train_opt.lambda_train, "frozen weight-layer count during training");
    train->add_option("--mode", train_opt.mode, "dropconnect, dropout, or deterministic");
    train->add_option("--scale-mode", train_opt.scale_mode, "inverted or none");
    train->add_option("--shift-max", train_opt.shift_max, "augmentation shift bound");
    train->add_option("--flip-prob", train_opt.flip_prob, "augmentation flip probability");
    train->callback([&] {
        json config = train_opt.build_config();
        train_opt.apply_train(config);
        exit_code = run("train", config);
    });

    Options predict_opt;
    auto* predict = app.add_subcommand("predict", "Monte Carlo prediction and metrics");
    add_common(predict, predict_opt);
    add_dataset_flags(predict, predict_opt);
    add_inference_flags(predict, predict_opt, false);
    predict->callback([&] {
        json config = predict_opt.build_config();
        predict_opt.apply_inference(config);
        exit_code = run("predict", config);
    });

    Options sweep_opt;
    auto* sweep = app.add_subcommand("sweep", "metrics over the lambda x drop-prob grid");
    add_common(sweep, sweep_opt);
    add_dataset_flags(sweep, sweep_opt);
    add_inference_flags(sweep, sweep_opt, true);
    sweep->callback([&] {
        json config = sweep_opt.build_config();
        sweep_opt.apply_inference(config);
        exit_code = run("sweep", config);
    });

    Options ood_opt;
    auto* ood = app.add_subcommand("ood", "entropy-based out-of-distribution detection");
    add_common(ood, ood_opt);
    add_dataset_flags(ood, ood_opt);
    add_inference_flags(ood, ood_opt, true);
    ood->add_option("--ood-images", ood_opt.ood_images, "IDX image file for the OOD dataset");
    ood->add_option("--ood-labels", ood_opt.ood_labels, "IDX label file for the OOD dataset");
    ood->add_option("--curve", ood_opt.curve, "ROC curve CSV to write (single lambda/drop-prob only)");
    ood->callback([&] {
        json config = ood_opt.build_config();
        ood_opt.apply_inference(config);
        exit_code = run("ood", config);
    });

    Options flops_opt;
    auto* flops = app.add_subcommand("flops", "analytic cost table over lambda");
    add_common(flops, flops_opt);
    add_inference_flags(flops, flops_opt, true);
    flops->add_option("--uniform-layers", flops_opt.uniform_layers, "uniform cost model: weight-layer count");
    flops->add_option("--uniform-cost", flops_opt.uniform_cost, "uniform cost model: cost per layer");
    flops->callback([&] {
        json config = flops_opt.build_config();
        flops_opt.apply_inference(config);
        exit_code = run("flops", config);
    });

    Options rotate_opt;
    auto* rotate = app.add_subcommand("rotate", "mean predictive entropy under rotation");
    add_common(rotate, rotate_opt);
    add_dataset_flags(rotate, rotate_opt);
    add_inference_flags(rotate, rotate_opt, false);
    rotate->add_option("--angles", rotate_opt.angles, "comma list of angles in degrees")->delimiter(',');
    rotate->callback([&] {
        json config = rotate_opt.build_config();
        rotate_opt.apply_inference(config);
        exit_code = run("rotate", config);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail_config(e.what());
    }
    return exit_code;
}
