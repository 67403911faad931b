#pragma once

// Experiment configuration: a JSON document mapped onto a validated struct.
// Every key has a default; unknown keys and out-of-range values are rejected
// with the offending key named. serialize() and parse_config() round-trip.

#include <cstdint>
#include <string>
#include <vector>

#include "fdaopt/data_federation.hpp"
#include "fdaopt/fl_engine.hpp"
#include "fdaopt/model_zoo.hpp"
#include "fdaopt/optimizers.hpp"

namespace fdaopt {

struct DataConfig {
    std::string source = "synthetic";  // "synthetic" | "csv"
    int input_dim = 16;
    int num_classes = 4;
    int samples_per_class = 100;
    double separation = 4.0;
    std::uint64_t seed = 7;
    std::string csv_path;

    bool operator==(const DataConfig&) const = default;
};

struct ModelConfig {
    ModelKind kind = ModelKind::LogReg;
    int hidden_dim = 32;  // used when kind == MLP
    std::uint64_t init_seed = 1;

    bool operator==(const ModelConfig&) const = default;
};

struct FdaConfig {
    ThetaMode theta_mode = ThetaMode::Adaptive;
    double theta_fixed = 0.0;
    double theta_min = 1e-12;
    std::int64_t tau_tilde_override = 0;  // 0 = derived from tau

    bool operator==(const FdaConfig&) const = default;
};

struct TargetConfig {
    std::vector<double> fractions = {0.9, 0.95};  // of baseline accuracy, ascending
    double baseline_accuracy = 0.0;               // 0 = measure centrally
    int baseline_epochs = 30;

    bool operator==(const TargetConfig&) const = default;
};

struct OutputConfig {
    std::string dir = "metrics";
    std::string prefix;

    bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
    std::string experiment_id = "experiment";
    Algorithm algorithm = Algorithm::FDAOpt;
    int rounds = 100;
    int tau_epochs = 1;           // local epochs per round
    std::int64_t tau_steps = 0;   // > 0 overrides tau_epochs with a raw step count
    int batch_size = 8;
    std::uint64_t seed = 42;      // batch-stream root
    bool weighted_average = false;

    ModelConfig model;
    DataConfig data;
    PartitionSpec partition{10, 1.0, 11};
    CohortSpec cohort{10, 13};
    OptimizerSpec client_opt;
    OptimizerSpec server_opt = fedavg_server_spec();
    SketchConfig sketch{7, 1024, 17};
    FdaConfig fda;
    TargetConfig targets;
    OutputConfig output;

    bool operator==(const ExperimentConfig&) const = default;
};

std::string to_string(ThetaMode mode);
ThetaMode theta_mode_from_string(const std::string& name);

// Parses and validates a JSON config document. Throws std::invalid_argument
// naming the key on unknown keys or out-of-range values.
ExperimentConfig parse_config(const std::string& text);

// Canonical JSON rendering with all defaults written out.
std::string serialize(const ExperimentConfig& config);

// Applies one "dotted.key=value" override on top of an existing config and
// revalidates. The value is parsed as JSON when possible, else as a string.
ExperimentConfig apply_override(const ExperimentConfig& config, const std::string& assignment);

}  // namespace fdaopt
