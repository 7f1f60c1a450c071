#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "train.hpp"

namespace sdc {

struct DatasetSpec {
    enum class Source { idx, csv, synthetic };
    Source source = Source::synthetic;
    std::string images, labels;  // idx
    std::string path;            // csv
    SynthSpec synth;             // synthetic
    std::uint64_t seed = 0;      // synthetic
};

struct InferenceConfig {
    int passes = 25;
    std::vector<int> lambdas = {0};
    std::vector<double> drop_probs = {0.1};
    MaskMode mode = MaskMode::dropconnect;
    ScaleMode scale_mode = ScaleMode::inverted;
    std::uint64_t seed = 0;
    bool keep_passes = false;
};

struct OutputConfig {
    std::string results;  // results file; empty = none
    std::string format = "json";
    std::string model;  // trained model destination
    std::string curve;  // ROC curve table destination
};

struct UniformCostSpec {
    bool present = false;
    int layers = 0;
    long long cost = 1;
};

// Parsed experiment description. Which sections a command requires is checked
// when the command runs; parsing only enforces schema (types, ranges, and no
// unknown keys anywhere).
struct ExperimentConfig {
    std::optional<DatasetSpec> dataset, test_dataset, ood_dataset;
    std::string architecture_json;  // raw JSON of the "architecture" section
    TrainConfig train;
    bool has_train = false;
    InferenceConfig inference;
    std::string model_path;  // model to load
    OutputConfig output;
    std::vector<double> angles = {0, 30, 60, 90, 120, 150, 180};
    UniformCostSpec uniform;
};

ExperimentConfig parse_config(const std::string& json_text);

}  // namespace sdc
