#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "metrics.hpp"
#include "results.hpp"

namespace sdc {

Dataset resolve_dataset(const DatasetSpec& spec);

// One inference evaluation at a fixed (lambda, drop_prob, seed); the record
// echoes everything needed to reproduce it bit-exactly except wall_time_ms.
Record predict_record(const Network& net, const Dataset& ds, int lambda_frozen, double drop_prob,
                      const InferenceConfig& inf, std::uint64_t seed);

std::vector<Record> run_train(const ExperimentConfig& cfg);
std::vector<Record> run_predict(const ExperimentConfig& cfg);
std::vector<Record> run_sweep(const ExperimentConfig& cfg);
std::vector<Record> run_ood(const ExperimentConfig& cfg);
std::vector<Record> run_flops(const ExperimentConfig& cfg);
std::vector<Record> run_rotate(const ExperimentConfig& cfg);

// Parses the config, dispatches on the command name, writes any configured
// output files, and returns the records as a JSON array string.
std::string run_command(const std::string& command, const std::string& config_json);

}  // namespace sdc
