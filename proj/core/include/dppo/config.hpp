#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dppo/metaloop.hpp"
#include "dppo/rewards.hpp"
#include "dppo/taskgen.hpp"

namespace dppo {

// Everything a run needs, loaded from one JSON config file. Unknown or
// ill-typed keys raise ConfigError naming the key.
struct ExperimentConfig {
    SuiteConfig suite;
    LoopConfig loop;  // loop.reward holds the reward spec
    double holdout_fraction = 0.2;
    std::uint64_t split_seed = 17;
    int pretrain_epochs = 150;
    double beta = 1.0;  // implicit-reward scale for the verification suite
    std::string mode = "dppo";
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string out_dir = "runs/out";

    void validate() const;
};

ExperimentConfig default_experiment_config();

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical resolved-config echo (stable key order and number rendering).
std::string experiment_config_to_json(const ExperimentConfig& config);

}  // namespace dppo
